#include "civic/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "civic/belief.hpp"
#include "civic/error.hpp"

namespace civic {

namespace {

// Relative slack used when deciding whether a contribution lands on a target.
// Profiles built by proportional scaling sum to the target only up to
// rounding, so an exact comparison would misreport them as short.
constexpr double kTargetSlack = 1e-12;

double refund_share(double x, double total, double budget) {
  return total > 0.0 ? x / total * budget : 0.0;
}

Payout finish(Payout p) {
  p.utility = p.valuation_term - p.cost + p.refund + p.belief_reward;
  return p;
}

}  // namespace

double DualMarketState::common_issued() const {
  return std::min(market_for.issued, market_against.issued);
}

Payout ppr_payout(double valuation, double x, double total, double budget,
                  bool provisioned) {
  Payout p;
  p.contribution = x;
  if (provisioned) {
    p.valuation_term = valuation;
    p.cost = x;
  } else {
    p.refund = refund_share(x, total, budget);
  }
  return finish(p);
}

double ppr_utility(const AgentProfile& agent, double x, double total,
                   double budget, bool provisioned) {
  return ppr_payout(agent.valuation, x, total, budget, provisioned).utility;
}

Payout pps_payout(double valuation, const ContributionRecord& rec,
                  bool provisioned) {
  Payout p;
  p.contribution = rec.amount;
  p.securities = rec.securities;
  p.cost = rec.amount;
  if (provisioned) {
    p.valuation_term = valuation;
  } else {
    p.refund = rec.securities;
  }
  return finish(p);
}

double pps_utility(const AgentProfile& agent, const ContributionRecord& rec,
                   bool provisioned) {
  return pps_payout(agent.valuation, rec, provisioned).utility;
}

Payout pprn_payout(double valuation, Market reported, double x,
                   double total_for, double total_against, double budget,
                   Verdict verdict) {
  Payout p;
  p.side = reported;
  p.contribution = x;
  const double refund = refund_share(x, total_for + total_against, budget);
  if (reported == Market::For) {
    if (verdict == Verdict::Provisioned) {
      p.valuation_term = valuation;
      p.cost = x;
    } else {
      p.refund = refund;
    }
  } else {
    if (verdict == Verdict::Rejected) {
      p.cost = x;
    } else {
      if (verdict == Verdict::Provisioned) p.valuation_term = valuation;
      p.refund = refund;
    }
  }
  return finish(p);
}

double pprn_utility(const AgentProfile& agent, Market reported, double x,
                    double total_for, double total_against, double budget,
                    Verdict verdict) {
  return pprn_payout(agent.valuation, reported, x, total_for, total_against,
                     budget, verdict)
      .utility;
}

Payout ppsn_payout(double valuation, const ContributionRecord& rec,
                   Verdict verdict) {
  Payout p;
  p.side = rec.market;
  p.contribution = rec.amount;
  p.securities = rec.securities;
  p.cost = rec.amount;
  if (rec.market == Market::For) {
    if (verdict == Verdict::Provisioned) {
      p.valuation_term = valuation;
    } else {
      p.refund = rec.securities;
    }
  } else if (verdict != Verdict::Rejected) {
    if (verdict == Verdict::Provisioned) p.valuation_term = valuation;
    p.refund = rec.securities;
  }
  return finish(p);
}

double ppsn_utility(const AgentProfile& agent, const ContributionRecord& rec,
                    Verdict verdict) {
  return ppsn_payout(agent.valuation, rec, verdict).utility;
}

ContributionRecord ppsn_allocate(DualMarketState& dual, const CostFunction& cf,
                                 AgentId agent, double x, Market market,
                                 Tick tick) {
  require(std::isfinite(x) && x >= 0.0, "ppsn_allocate: amount must be >= 0");
  if (dual.market_for.reached() || dual.market_against.reached()) {
    fail(ErrorKind::InvalidInput,
         "ppsn_allocate: a target has already been reached");
  }
  ContributionRecord rec;
  rec.agent = agent;
  rec.amount = x;
  rec.tick = tick;
  rec.market = market;
  rec.priced_at = dual.common_issued();
  if (x == 0.0) return rec;

  MarketState& m = dual.market(market);
  rec.securities = securities_for(cf, x, rec.priced_at);
  m.issued += securities_for(cf, x, m.issued);
  m.raised += x;
  m.ledger.push_back(rec);
  return rec;
}

bool action_order(const Action& a, const Action& b) {
  return std::tie(a.tick, a.agent) < std::tie(b.tick, b.agent);
}

namespace {

void validate_actions(const CampaignConfig& config,
                      const std::vector<Action>& actions) {
  std::map<AgentId, Market> market_of;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Action& a = actions[i];
    const std::string where = "action " + std::to_string(i) + " (agent " +
                              std::to_string(a.agent) + "): ";
    require(std::isfinite(a.amount) && a.amount >= 0.0,
            where + "amount must be >= 0");
    require(a.tick >= 0 && a.tick <= config.deadline_contribution,
            where + "tick " + std::to_string(a.tick) +
                " is outside [0, deadline_contribution]");
    if (is_two_phase(config.mechanism)) {
      require(a.tick > *config.deadline_belief,
              where + "contribution before the belief phase closed");
    }
    if (!is_dual_market(config.mechanism)) {
      require(a.market == Market::For,
              where + "single-market mechanism only accepts market 'for'");
    }
    auto [it, inserted] = market_of.emplace(a.agent, a.market);
    require(inserted || it->second == a.market,
            where + "an agent may contribute to one market only");
    if (i > 0) {
      require(!action_order(a, actions[i - 1]),
              where + "actions must be sorted by tick, then agent id");
    }
  }
}

}  // namespace

CampaignRun run_campaign(const CampaignConfig& config,
                         const std::vector<Action>& actions) {
  validate(config);
  validate_actions(config, actions);

  const Mechanism mech = config.mechanism;
  const CostFunction cf = config.cost_function();
  const bool securities = is_securities_based(mech);

  CampaignRun run;
  run.markets.market_for.target = config.target(Market::For);
  if (is_dual_market(mech)) {
    run.markets.market_against.target = config.target(Market::Against);
  }

  for (const Action& a : actions) {
    if (a.amount == 0.0) continue;
    MarketState& m = run.markets.market(a.market);
    double x = a.amount;
    bool hit = false;
    if (x >= m.remaining() - kTargetSlack * m.target) {
      x = m.remaining();
      hit = true;
    }

    ContributionRecord rec;
    if (mech == Mechanism::PPSN) {
      rec = ppsn_allocate(run.markets, cf, a.agent, x, a.market, a.tick);
    } else {
      rec.agent = a.agent;
      rec.amount = x;
      rec.tick = a.tick;
      rec.market = a.market;
      if (securities) {
        rec.priced_at = m.issued;
        rec.securities = securities_for(cf, x, m.issued);
        m.issued += rec.securities;
      }
      m.raised += x;
      m.ledger.push_back(rec);
    }
    run.ledger.push_back(rec);

    if (hit) {
      m.raised = m.target;
      run.verdict = a.market == Market::For ? Verdict::Provisioned
                                            : Verdict::Rejected;
      run.halted_at = a.tick;
      break;
    }
  }
  return run;
}

Outcome settle(const CampaignConfig& config,
               const std::vector<AgentProfile>& agents, const CampaignRun& run,
               const std::optional<BeliefAwards>& awards) {
  const Mechanism mech = config.mechanism;
  if (is_two_phase(mech) && !awards) {
    fail(ErrorKind::InvalidInput,
         std::string("settle: ") + to_string(mech) +
             " requires belief-phase rewards");
  }

  Outcome out;
  out.verdict = run.verdict;
  out.total_for = run.markets.market_for.raised;
  out.total_against = run.markets.market_against.raised;
  const bool provisioned = run.verdict == Verdict::Provisioned;

  // Aggregate each agent's contributions; an agent uses a single market.
  std::map<AgentId, ContributionRecord> held;
  for (const auto& rec : run.ledger) {
    auto [it, inserted] = held.try_emplace(rec.agent, rec);
    if (!inserted) {
      it->second.amount += rec.amount;
      it->second.securities += rec.securities;
    }
  }

  for (const auto& agent : agents) {
    ContributionRecord rec;
    rec.agent = agent.id;
    rec.market = derive_preference(agent);
    if (auto it = held.find(agent.id); it != held.end()) rec = it->second;
    if (!is_dual_market(mech)) rec.market = Market::For;

    Payout p;
    switch (mech) {
      case Mechanism::PPR:
        p = ppr_payout(agent.valuation, rec.amount, out.total_for,
                       config.refund_pool(), provisioned);
        break;
      case Mechanism::PPS:
        p = pps_payout(agent.valuation, rec, provisioned);
        break;
      case Mechanism::PPRN:
        p = pprn_payout(agent.valuation, rec.market, rec.amount,
                        out.total_for, out.total_against,
                        config.refund_pool(), run.verdict);
        break;
      case Mechanism::PPSN:
        p = ppsn_payout(agent.valuation, rec, run.verdict);
        break;
      case Mechanism::PPRx:
      case Mechanism::PPSx: {
        const auto side_it = awards->sides.find(agent.id);
        const BeliefSide side = side_it != awards->sides.end()
                                    ? side_it->second
                                    : agent.belief_side;
        const auto reward_it = awards->rewards.find(agent.id);
        const double reward =
            reward_it != awards->rewards.end() ? reward_it->second : 0.0;
        p = mech == Mechanism::PPRx
                ? pprx_payout(side, agent.valuation, rec.amount, out.total_for,
                              config.refund_pool(), reward, provisioned)
                : ppsx_payout(side, agent.valuation, rec, reward, provisioned);
        break;
      }
    }
    p.side = rec.market;
    p.securities = rec.securities;
    out.payouts.emplace(agent.id, p);
  }
  return out;
}

}  // namespace civic
