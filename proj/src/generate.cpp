#include "civic/generate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "civic/equilibrium.hpp"
#include "civic/error.hpp"

namespace civic {

long Rng::integer(long lo, long hi) {
  require(lo <= hi, "Rng::integer: empty range");
  const auto span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<long>(std::floor(uniform() * span)));
}

std::vector<std::string> builtin_template_names() {
  return {"ppr", "pps", "pprn", "ppsn", "pprx", "ppsx"};
}

ScenarioTemplate builtin_template(const std::string& name) {
  ScenarioTemplate t;
  t.name = name;
  if (name == "ppr") {
    t.mechanism = Mechanism::PPR;
  } else if (name == "pps") {
    t.mechanism = Mechanism::PPS;
    t.max_agents = 5;
  } else if (name == "pprn") {
    t.mechanism = Mechanism::PPRN;
  } else if (name == "ppsn") {
    t.mechanism = Mechanism::PPSN;
    t.max_agents = 5;
    t.cost.liquidity = 5.0;
  } else if (name == "pprx") {
    t.mechanism = Mechanism::PPRx;
    t.max_epsilon = 0.3;
  } else if (name == "ppsx") {
    t.mechanism = Mechanism::PPSx;
    t.max_agents = 5;
    t.max_epsilon = 0.3;
    t.cost.liquidity = 5.0;
  } else {
    fail(ErrorKind::InvalidInput, "unknown template '" + name + "'");
  }
  return t;
}

namespace {

bool feasible(const Scenario& s) {
  try {
    if (!all_satisfied(check_conditions(s.config, s.agents))) return false;
    construct_profile(s.config, s.agents);
    return true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Infeasible) return false;
    throw;
  }
}

// Largest s in (0, hi] with feasible(apply(s)), assuming feasibility holds on
// an initial interval.
double largest_feasible(const std::function<bool(double)>& ok, double hi) {
  double lo = hi * 1e-6;
  if (!ok(lo)) return 0.0;
  if (ok(hi)) return hi;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

void place_targets(Scenario& s, const ScenarioTemplate& t, Rng& rng) {
  CampaignConfig& c = s.config;
  const ValuationTotals v = aggregate_valuations(s.agents);
  const bool fixed = t.provision_point || t.target_for || t.target_against;
  const double margin = rng.uniform(t.min_margin, t.max_margin);

  auto with = [&](const std::function<void(double)>& set) {
    return [&, set](double x) {
      set(x);
      return feasible(s);
    };
  };
  auto settle_on = [&](const std::function<void(double)>& set, double hi) {
    if (fixed) {
      set(1.0);
      if (!feasible(s)) {
        fail(ErrorKind::Infeasible,
             "template '" + t.name +
                 "': fixed targets cannot satisfy the existence conditions");
      }
      return;
    }
    const double top = largest_feasible(with(set), hi);
    if (top <= 0.0) {
      fail(ErrorKind::Infeasible,
           "template '" + t.name + "': no feasible target found");
    }
    double x = margin * top;
    for (int i = 0; i < 20; ++i, x *= 0.5) {
      set(x);
      if (feasible(s)) return;
    }
    fail(ErrorKind::Infeasible,
         "template '" + t.name + "': no feasible target found");
  };

  switch (c.mechanism) {
    case Mechanism::PPR: {
      const double h0 = t.provision_point.value_or(
          rng.uniform(0.3, 0.8) * v.for_);
      if (h0 >= v.for_) {
        fail(ErrorKind::Infeasible,
             "template '" + t.name + "': provision point " +
                 std::to_string(h0) + " is not below total valuation " +
                 std::to_string(v.for_));
      }
      c.provision_point = h0;
      c.refund_budget = rng.uniform(0.1, 0.9) * (v.for_ - h0);
      if (!feasible(s)) {
        fail(ErrorKind::Infeasible, "template '" + t.name + "': infeasible");
      }
      break;
    }
    case Mechanism::PPRN: {
      const double h1 = t.target_for.value_or(rng.uniform(0.3, 0.8) * v.for_);
      const double h2 =
          t.target_against.value_or(rng.uniform(0.3, 0.8) * v.against);
      if (h1 >= v.for_ || h2 >= v.against) {
        fail(ErrorKind::Infeasible,
             "template '" + t.name +
                 "': a target is not below its side's total valuation");
      }
      c.target_for = h1;
      c.target_against = h2;
      const double limit = std::min((h1 + h2) * (v.for_ - h1) / h1,
                                    (h1 + h2) * (v.against - h2) / h2);
      c.refund_budget = rng.uniform(0.1, 0.9) * limit;
      if (!feasible(s)) {
        fail(ErrorKind::Infeasible, "template '" + t.name + "': infeasible");
      }
      break;
    }
    case Mechanism::PPRx:
    case Mechanism::PPSx:
    case Mechanism::PPS: {
      if (c.mechanism == Mechanism::PPRx) {
        c.contribution_budget = rng.uniform(0.05, 0.5) * v.for_;
      }
      if (is_two_phase(c.mechanism)) {
        c.belief_budget = rng.uniform(0.05, 0.5) * v.for_;
      }
      const double cap = v.for_ + c.belief_budget.value_or(0.0);
      settle_on(
          [&](double x) {
            c.provision_point = fixed ? *t.provision_point : x;
          },
          cap);
      break;
    }
    case Mechanism::PPSN: {
      const double w1 = rng.uniform(0.6, 1.0) * v.for_;
      const double w2 = rng.uniform(0.6, 1.0) * v.against;
      settle_on(
          [&](double x) {
            c.target_for = fixed ? *t.target_for : x * w1;
            c.target_against = fixed ? *t.target_against : x * w2;
          },
          1.0);
      break;
    }
  }
}

}  // namespace

Scenario generate_scenario(const ScenarioTemplate& t, std::uint64_t seed) {
  require(t.min_agents >= 1 && t.max_agents >= t.min_agents,
          "template: agent count range is empty");
  require(t.min_valuation > 0.0 && t.max_valuation >= t.min_valuation,
          "template: valuation range must be positive");
  require(t.max_epsilon >= 0.0 && t.max_epsilon <= 0.5,
          "template: max_epsilon must lie in [0, 0.5]");
  const Mechanism mech = t.mechanism;
  const bool dual = is_dual_market(mech);
  const bool two_phase = is_two_phase(mech);
  require(!dual || t.min_agents >= 2,
          "template: dual-market mechanisms need >= 2 agents");
  require(!two_phase || t.min_agents >= 3,
          "template: two-phase mechanisms need >= 3 agents");

  Rng rng(seed);
  Scenario s;
  s.name = t.name + "-" + std::to_string(seed);
  s.seed = seed;
  CampaignConfig& c = s.config;
  c.mechanism = mech;
  c.deadline_contribution = t.deadline_contribution;
  if (two_phase) c.deadline_belief = t.deadline_belief;
  if (is_securities_based(mech)) c.cost_params = t.cost;

  const int n = static_cast<int>(rng.integer(t.min_agents, t.max_agents));
  for (int i = 1; i <= n; ++i) {
    AgentProfile a;
    a.id = i;
    a.valuation = rng.uniform(t.min_valuation, t.max_valuation);
    // Agents 1 and 2 anchor one supporter and one opponent.
    const bool negative = i == 2 || (i > 2 && rng.chance(t.negative_share));
    if (dual && negative) a.valuation = -a.valuation;
    if (two_phase) {
      a.belief_epsilon = rng.uniform(0.0, t.max_epsilon);
      a.belief_side = rng.chance(0.5) ? BeliefSide::ProvisionLikely
                                      : BeliefSide::RejectionLikely;
      a.arrival_belief = static_cast<Tick>(rng.integer(0, t.deadline_belief));
      a.arrival_contribution = static_cast<Tick>(
          rng.integer(t.deadline_belief + 1, t.deadline_contribution));
    } else {
      a.arrival_contribution =
          static_cast<Tick>(rng.integer(0, t.deadline_contribution));
    }
    s.agents.push_back(a);
  }
  if (t.max_total_for) {
    const double total = aggregate_valuations(s.agents).for_;
    if (total > *t.max_total_for) {
      for (auto& a : s.agents) {
        if (a.valuation > 0.0) a.valuation *= *t.max_total_for / total;
      }
    }
  }

  place_targets(s, t, rng);
  s.analysis.run_campaign = true;
  s.analysis.certify_ne = true;
  s.analysis.certify_spe = is_securities_based(mech);
  validate(s);
  return s;
}

std::vector<Scenario> generate_batch(const ScenarioTemplate& tmpl,
                                     std::uint64_t seed, int count) {
  require(count >= 0, "gen: count must be >= 0");
  std::vector<Scenario> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(generate_scenario(tmpl, seed + static_cast<std::uint64_t>(k)));
  }
  return out;
}

}  // namespace civic
