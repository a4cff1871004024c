#include "civic/model.hpp"

#include <cmath>
#include <set>

#include "civic/error.hpp"

namespace civic {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::PPR: return "PPR";
    case Mechanism::PPS: return "PPS";
    case Mechanism::PPRN: return "PPRN";
    case Mechanism::PPSN: return "PPSN";
    case Mechanism::PPRx: return "PPRx";
    case Mechanism::PPSx: return "PPSx";
  }
  return "?";
}

const char* to_string(Market m) { return m == Market::For ? "for" : "against"; }

const char* to_string(BeliefSide s) {
  return s == BeliefSide::ProvisionLikely ? "provision_likely"
                                          : "rejection_likely";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Provisioned: return "provisioned";
    case Verdict::Rejected: return "rejected";
    case Verdict::Expired: return "expired";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& text) {
  for (auto m : {Mechanism::PPR, Mechanism::PPS, Mechanism::PPRN,
                 Mechanism::PPSN, Mechanism::PPRx, Mechanism::PPSx}) {
    if (text == to_string(m)) return m;
  }
  fail(ErrorKind::Parse, "unknown mechanism '" + text + "'");
}

Market parse_market(const std::string& text) {
  if (text == "for") return Market::For;
  if (text == "against") return Market::Against;
  fail(ErrorKind::Parse, "unknown market '" + text + "' (expected for|against)");
}

BeliefSide parse_belief_side(const std::string& text) {
  if (text == "provision_likely") return BeliefSide::ProvisionLikely;
  if (text == "rejection_likely") return BeliefSide::RejectionLikely;
  fail(ErrorKind::Parse, "unknown belief_side '" + text +
                             "' (expected provision_likely|rejection_likely)");
}

bool is_dual_market(Mechanism m) {
  return m == Mechanism::PPRN || m == Mechanism::PPSN;
}

bool is_two_phase(Mechanism m) {
  return m == Mechanism::PPRx || m == Mechanism::PPSx;
}

bool is_securities_based(Mechanism m) {
  return m == Mechanism::PPS || m == Mechanism::PPSN || m == Mechanism::PPSx;
}

Market derive_preference(const AgentProfile& agent) {
  return agent.valuation >= 0.0 ? Market::For : Market::Against;
}

ValuationTotals aggregate_valuations(const std::vector<AgentProfile>& agents) {
  ValuationTotals t;
  for (const auto& a : agents) {
    if (a.valuation >= 0.0) {
      t.for_ += a.valuation;
    } else {
      t.against -= a.valuation;
    }
  }
  t.net = t.for_ - t.against;
  return t;
}

double CampaignConfig::target(Market m) const {
  if (is_dual_market(mechanism)) {
    const auto& t = m == Market::For ? target_for : target_against;
    require(t.has_value(), "config: missing provision_points");
    return *t;
  }
  require(m == Market::For, std::string("config: ") + to_string(mechanism) +
                                " has no against market");
  require(provision_point.has_value(), "config: missing provision_point");
  return *provision_point;
}

double CampaignConfig::refund_pool() const {
  if (mechanism == Mechanism::PPRx) return contribution_budget.value_or(0.0);
  return refund_budget.value_or(0.0);
}

CostFunction CampaignConfig::cost_function() const {
  return cost_params.value_or(CostFunction{});
}

namespace {

void require_positive(const std::optional<double>& v, const char* field,
                      bool needed, Mechanism m) {
  const std::string mech = to_string(m);
  if (needed) {
    require(v.has_value(), std::string(field) + ": required for " + mech);
    require(std::isfinite(*v) && *v > 0.0,
            std::string(field) + ": must be > 0 (got " + std::to_string(*v) +
                ")");
  } else {
    require(!v.has_value(),
            std::string(field) + ": not used by " + mech + ", must be absent");
  }
}

}  // namespace

void validate(const CampaignConfig& c) {
  const Mechanism m = c.mechanism;
  const bool dual = is_dual_market(m);
  const bool two_phase = is_two_phase(m);
  require_positive(c.provision_point, "provision_point", !dual, m);
  require_positive(c.target_for, "provision_points.for", dual, m);
  require_positive(c.target_against, "provision_points.against", dual, m);
  require_positive(c.refund_budget, "refund_budget",
                   m == Mechanism::PPR || m == Mechanism::PPRN, m);
  require_positive(c.belief_budget, "belief_budget", two_phase, m);
  require_positive(c.contribution_budget, "contribution_budget",
                   m == Mechanism::PPRx, m);
  require(c.deadline_contribution >= 0,
          "deadline_contribution: must be >= 0");
  if (two_phase) {
    require(c.deadline_belief.has_value(),
            std::string("deadline_belief: required for ") + to_string(m));
    require(*c.deadline_belief >= 0, "deadline_belief: must be >= 0");
    require(*c.deadline_belief < c.deadline_contribution,
            "deadline_belief: belief phase must close before the "
            "contribution deadline");
  } else {
    require(!c.deadline_belief.has_value(),
            std::string("deadline_belief: not used by ") + to_string(m) +
                ", must be absent");
  }
  if (is_securities_based(m)) {
    if (c.cost_params) validate(*c.cost_params);
  } else {
    require(!c.cost_params.has_value(),
            std::string("cost: not used by ") + to_string(m) +
                ", must be absent");
  }
}

void validate(const AgentProfile& a, const CampaignConfig& c) {
  const std::string who = "agent " + std::to_string(a.id) + ": ";
  require(std::isfinite(a.valuation), who + "valuation must be finite");
  require(a.belief_epsilon >= 0.0 && a.belief_epsilon <= 0.5,
          who + "belief_epsilon must lie in [0, 0.5]");
  require(a.arrival_contribution >= 0 &&
              a.arrival_contribution <= c.deadline_contribution,
          who + "arrival_contribution must lie in [0, deadline_contribution]");
  if (is_two_phase(c.mechanism)) {
    require(a.arrival_belief >= 0 && a.arrival_belief <= *c.deadline_belief,
            who + "arrival_belief must lie in [0, deadline_belief]");
    require(a.arrival_contribution > *c.deadline_belief,
            who + "arrival_contribution must come after deadline_belief");
  } else {
    require(a.arrival_belief >= 0, who + "arrival_belief must be >= 0");
  }
  if (!is_dual_market(c.mechanism)) {
    require(a.valuation >= 0.0,
            who + "negative valuation requires a dual-market mechanism "
                  "(PPRN or PPSN)");
  }
}

void validate_population(const std::vector<AgentProfile>& agents,
                         const CampaignConfig& c) {
  std::set<AgentId> ids;
  for (const auto& a : agents) {
    require(ids.insert(a.id).second,
            "agents: duplicate id " + std::to_string(a.id));
    validate(a, c);
  }
  if (is_two_phase(c.mechanism)) {
    require(agents.size() >= 3, "agents: RBTS requires n >= 3");
  }
}

const AgentProfile& find_agent(const std::vector<AgentProfile>& agents,
                               AgentId id) {
  for (const auto& a : agents) {
    if (a.id == id) return a;
  }
  fail(ErrorKind::InvalidInput, "unknown agent id " + std::to_string(id));
}

}  // namespace civic
