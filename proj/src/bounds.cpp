#include <algorithm>
#include <cmath>

#include "civic/equilibrium.hpp"
#include "civic/error.hpp"

namespace civic {

double bound_pprn(const AgentProfile& agent, double h1, double h2,
                  double budget) {
  require(h1 > 0.0 && h2 > 0.0 && budget > 0.0,
          "bound_pprn: targets and budget must be > 0");
  return (h1 + h2) / (budget + h1 + h2) * std::abs(agent.valuation);
}

double bound_ppsn(const AgentProfile& agent, const CostFunction& cf,
                  double Q) {
  require(Q >= 0.0, "bound_ppsn: Q must be >= 0");
  return contribution_for(cf, std::abs(agent.valuation), Q);
}

double bound_pprx(const AgentProfile& agent, double h0,
                  double contribution_budget, double reward) {
  require(h0 > 0.0 && contribution_budget > 0.0,
          "bound_pprx: provision point and budget must be > 0");
  require(reward >= 0.0, "bound_pprx: reward must be >= 0");
  const double k1 = agent.k1();
  const double k2 = agent.k2();
  const double theta = agent.valuation;
  if (agent.belief_side == BeliefSide::ProvisionLikely) {
    return std::max(0.0, k1 * (theta + reward) * h0 /
                             (k2 * contribution_budget + k1 * h0));
  }
  return std::max(0.0, (k2 * theta - k1 * reward) * h0 /
                           (k1 * contribution_budget + k2 * h0));
}

double bound_ppsx(const AgentProfile& agent, const CostFunction& cf, double q,
                  double reward) {
  require(q >= 0.0, "bound_ppsx: q must be >= 0");
  require(reward >= 0.0, "bound_ppsx: reward must be >= 0");
  const double value = agent.belief_side == BeliefSide::ProvisionLikely
                           ? agent.valuation + reward
                           : std::max(agent.valuation - reward, 0.0);
  return contribution_for(cf, value, q);
}

double ppsx_rejection_cap(const AgentProfile& agent, const CostFunction& cf,
                          double q, double reward) {
  const double k1 = agent.k1();
  const double k2 = agent.k2();
  const double theta = agent.valuation;
  auto excess = [&](double x) {
    return k2 * (theta - x) - k1 * (securities_for(cf, x, q) - x + reward);
  };
  if (excess(0.0) <= 0.0) return 0.0;
  // excess is strictly decreasing and negative at x = theta.
  double lo = 0.0;
  double hi = std::max(theta, 0.0);
  if (excess(hi) > 0.0) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double equilibrium_bound(const CampaignConfig& config, const AgentProfile& agent,
                     double priced_at, double reward) {
  const CostFunction cf = config.cost_function();
  AgentProfile neutral = agent;
  neutral.belief_epsilon = 0.0;
  switch (config.mechanism) {
    case Mechanism::PPR:
      return bound_pprx(neutral, *config.provision_point,
                        *config.refund_budget, 0.0);
    case Mechanism::PPS:
      return bound_ppsx(neutral, cf, priced_at, 0.0);
    case Mechanism::PPRN:
      return bound_pprn(agent, *config.target_for, *config.target_against,
                        *config.refund_budget);
    case Mechanism::PPSN:
      return bound_ppsn(agent, cf, priced_at);
    case Mechanism::PPRx:
      return bound_pprx(agent, *config.provision_point,
                        *config.contribution_budget, reward);
    case Mechanism::PPSx:
      return bound_ppsx(agent, cf, priced_at, reward);
  }
  return 0.0;
}

BranchValues branch_values(const CampaignConfig& config,
                           const AgentProfile& agent, double x,
                           double priced_at, double reward) {
  const Mechanism mech = config.mechanism;
  const CostFunction cf = config.cost_function();
  const Market market = derive_preference(agent);
  const double p = is_two_phase(mech) ? agent.provision_belief() : 0.5;

  ContributionRecord rec;
  rec.agent = agent.id;
  rec.amount = x;
  rec.market = market;
  rec.priced_at = priced_at;
  if (is_securities_based(mech)) rec.securities = securities_for(cf, x, priced_at);

  BranchValues v;
  switch (mech) {
    case Mechanism::PPR: {
      const double h0 = *config.provision_point;
      v.success = p * ppr_payout(agent.valuation, x, h0, *config.refund_budget,
                                 true).utility;
      v.failure = (1 - p) * ppr_payout(agent.valuation, x, h0,
                                       *config.refund_budget, false).utility;
      break;
    }
    case Mechanism::PPS:
      v.success = p * pps_payout(agent.valuation, rec, true).utility;
      v.failure = (1 - p) * pps_payout(agent.valuation, rec, false).utility;
      break;
    case Mechanism::PPRN: {
      const double h1 = *config.target_for;
      const double h2 = *config.target_against;
      const Verdict win = market == Market::For ? Verdict::Provisioned
                                                : Verdict::Rejected;
      const Verdict lose = market == Market::For ? Verdict::Rejected
                                                 : Verdict::Provisioned;
      v.success = p * pprn_payout(agent.valuation, market, x, h1, h2,
                                  *config.refund_budget, win).utility;
      v.failure = (1 - p) * pprn_payout(agent.valuation, market, x, h1, h2,
                                        *config.refund_budget, lose).utility;
      break;
    }
    case Mechanism::PPSN: {
      const Verdict win = market == Market::For ? Verdict::Provisioned
                                                : Verdict::Rejected;
      const Verdict lose = market == Market::For ? Verdict::Rejected
                                                 : Verdict::Provisioned;
      v.success = p * ppsn_payout(agent.valuation, rec, win).utility;
      v.failure = (1 - p) * ppsn_payout(agent.valuation, rec, lose).utility;
      break;
    }
    case Mechanism::PPRx: {
      const double h0 = *config.provision_point;
      const double bc = *config.contribution_budget;
      v.success = p * pprx_payout(agent.belief_side, agent.valuation, x, h0,
                                  bc, reward, true).utility;
      v.failure = (1 - p) * pprx_payout(agent.belief_side, agent.valuation, x,
                                        h0, bc, reward, false).utility;
      break;
    }
    case Mechanism::PPSx:
      v.success = p * ppsx_payout(agent.belief_side, agent.valuation, rec,
                                  reward, true).utility;
      v.failure = (1 - p) * ppsx_payout(agent.belief_side, agent.valuation,
                                        rec, reward, false).utility;
      break;
  }
  return v;
}

std::vector<ConditionCheck> check_conditions(
    const CampaignConfig& config, const std::vector<AgentProfile>& agents) {
  validate(config);
  const ValuationTotals totals = aggregate_valuations(agents);
  const CostFunction cf = config.cost_function();
  std::vector<ConditionCheck> out;
  auto add = [&](std::string name, double lhs, double rhs, bool strict) {
    out.push_back({std::move(name), strict ? lhs < rhs : lhs <= rhs, lhs, rhs});
  };
  auto securities_needed = [&](double h) {
    return inverse_cost(cf, h + cost(cf, 0.0));
  };

  switch (config.mechanism) {
    case Mechanism::PPR: {
      const double h0 = *config.provision_point;
      add("refund_budget < total_valuation - provision_point",
          *config.refund_budget, totals.for_ - h0, true);
      break;
    }
    case Mechanism::PPS:
      add("securities_for_target < total_valuation",
          securities_needed(*config.provision_point), totals.for_, true);
      break;
    case Mechanism::PPRN: {
      const double h1 = *config.target_for;
      const double h2 = *config.target_against;
      const double b = *config.refund_budget;
      add("for: total_valuation > target", h1, totals.for_, true);
      add("against: total_valuation > target", h2, totals.against, true);
      add("for: refund_budget bound", b,
          (h1 + h2) * (totals.for_ - h1) / h1, true);
      add("against: refund_budget bound", b,
          (h1 + h2) * (totals.against - h2) / h2, true);
      break;
    }
    case Mechanism::PPSN:
      add("for: securities_for_target < total_valuation",
          securities_needed(*config.target_for), totals.for_, true);
      add("against: securities_for_target < total_valuation",
          securities_needed(*config.target_against), totals.against, true);
      break;
    case Mechanism::PPRx:
    case Mechanism::PPSx:
      add("provision_point <= total_valuation + belief_budget",
          *config.provision_point, totals.for_ + *config.belief_budget, false);
      break;
  }
  return out;
}

bool all_satisfied(const std::vector<ConditionCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ConditionCheck& c) { return c.satisfied; });
}

OrderingGap contribution_ordering_gap(const AgentProfile& plus,
                                      const AgentProfile& minus,
                                      const OrderingContext& ctx) {
  require(plus.belief_side == BeliefSide::ProvisionLikely &&
              minus.belief_side == BeliefSide::RejectionLikely,
          "contribution_ordering_gap: need one provision-likely and one "
          "rejection-likely agent");
  require(plus.valuation == minus.valuation &&
              plus.belief_epsilon == minus.belief_epsilon &&
              plus.arrival_contribution == minus.arrival_contribution,
          "contribution_ordering_gap: agents are not a matched pair");
  OrderingGap g;
  if (ctx.mechanism == Mechanism::PPRx) {
    g.plus = bound_pprx(plus, ctx.provision_point, ctx.contribution_budget,
                        ctx.reward);
    g.minus = bound_pprx(minus, ctx.provision_point, ctx.contribution_budget,
                         ctx.reward);
  } else if (ctx.mechanism == Mechanism::PPSx) {
    g.plus = bound_ppsx(plus, ctx.cost, ctx.q, ctx.reward);
    g.minus = bound_ppsx(minus, ctx.cost, ctx.q, ctx.reward);
  } else {
    fail(ErrorKind::Unsupported,
         "contribution_ordering_gap: mechanism must be PPRx or PPSx");
  }
  g.gap = g.plus - g.minus;
  return g;
}

double combined_mechanism_gap(const AgentProfile& agent, double R) {
  require(R >= 0.0, "combined_mechanism_gap: R must be >= 0");
  const double diff = (agent.k2() - agent.k1()) * R;
  return agent.belief_side == BeliefSide::ProvisionLikely ? diff : -diff;
}

}  // namespace civic
