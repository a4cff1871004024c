#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "civic/belief.hpp"
#include "civic/error.hpp"
#include "civic/mechanisms.hpp"

namespace civic {
namespace {

constexpr double kSecuritiesFor1 = 1.48988012564475;  // ln(2e - 1)

AgentProfile agent(AgentId id, double valuation) {
  AgentProfile a;
  a.id = id;
  a.valuation = valuation;
  return a;
}

ContributionRecord record(double x, double q, const CostFunction& cf = {}) {
  ContributionRecord r;
  r.amount = x;
  r.priced_at = q;
  r.securities = securities_for(cf, x, q);
  return r;
}

CampaignConfig ppr(double h0, double budget) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPR;
  c.provision_point = h0;
  c.refund_budget = budget;
  c.deadline_contribution = 10;
  return c;
}

CampaignConfig pprn(double h1, double h2, double budget) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRN;
  c.target_for = h1;
  c.target_against = h2;
  c.refund_budget = budget;
  c.deadline_contribution = 10;
  return c;
}

TEST(PprUtility, Branches) {
  EXPECT_DOUBLE_EQ(ppr_utility(agent(1, 10), 4, 20, 5, true), 6);
  EXPECT_DOUBLE_EQ(ppr_utility(agent(1, 10), 4, 20, 5, false), 1);
  EXPECT_DOUBLE_EQ(ppr_utility(agent(1, 10), 0, 20, 5, false), 0);
  EXPECT_DOUBLE_EQ(ppr_utility(agent(1, 10), 0, 0, 5, false), 0);
}

TEST(PpsUtility, Branches) {
  EXPECT_DOUBLE_EQ(pps_utility(agent(1, 10), record(4, 0), true), 6);
  EXPECT_NEAR(pps_utility(agent(1, 10), record(1, 0), false),
              kSecuritiesFor1 - 1, 1e-13);
  EXPECT_EQ(pps_utility(agent(1, 10), record(0, 0), false), 0);
}

TEST(PpsUtility, RefundDominatesContribution) {
  for (int i = 1; i <= 100; ++i) {
    for (int j = 0; j <= 20; ++j) {
      ASSERT_GT(pps_utility(agent(1, 5), record(0.1 * i, 0.5 * j), false), 0.0);
    }
  }
}

TEST(PprnUtility, Branches) {
  EXPECT_DOUBLE_EQ(pprn_utility(agent(1, 10), Market::For, 5, 10, 5, 10,
                                Verdict::Provisioned),
                   5);
  EXPECT_DOUBLE_EQ(pprn_utility(agent(2, -8), Market::Against, 3, 20, 10, 10,
                                Verdict::Rejected),
                   -3);
  EXPECT_DOUBLE_EQ(pprn_utility(agent(2, -8), Market::Against, 3, 20, 10, 10,
                                Verdict::Provisioned),
                   -7);
  // Expired: refund on both sides and no valuation term.
  EXPECT_DOUBLE_EQ(pprn_utility(agent(2, -8), Market::Against, 3, 20, 10, 10,
                                Verdict::Expired),
                   1);
  EXPECT_DOUBLE_EQ(pprn_utility(agent(1, 8), Market::For, 3, 20, 10, 10,
                                Verdict::Expired),
                   1);
}

TEST(PpsnUtility, Branches) {
  ContributionRecord rec = record(5, 0);
  rec.market = Market::For;
  EXPECT_DOUBLE_EQ(ppsn_utility(agent(1, 10), rec, Verdict::Provisioned), 5);
  rec = record(3, 0);
  rec.market = Market::Against;
  EXPECT_DOUBLE_EQ(ppsn_utility(agent(2, -8), rec, Verdict::Rejected), -3);
  EXPECT_NEAR(ppsn_utility(agent(2, -8), rec, Verdict::Expired),
              rec.securities - 3, 1e-12);
}

TEST(PpsnUtility, IndifferentAtBound) {
  // x buys exactly R = |theta|, so rejection (-x) and provision
  // (theta + R - x) pay the same.
  const CostFunction cf{};
  const double x = contribution_for(cf, 8.0, 0.0);
  ContributionRecord rec = record(x, 0.0);
  rec.market = Market::Against;
  EXPECT_NEAR(rec.securities, 8.0, 1e-9);
  EXPECT_NEAR(ppsn_utility(agent(2, -8), rec, Verdict::Provisioned),
              ppsn_utility(agent(2, -8), rec, Verdict::Rejected), 1e-9);
}

TEST(PpsnAllocate, CommonRefundScheme) {
  const CostFunction cf{};
  DualMarketState dual;
  dual.market_for.target = 100;
  dual.market_against.target = 100;
  auto first = ppsn_allocate(dual, cf, 1, 1.0, Market::For, 0);
  EXPECT_NEAR(first.securities, kSecuritiesFor1, 1e-13);
  EXPECT_EQ(first.priced_at, 0.0);
  // The against leg is still empty, so Q stays 0 and R repeats.
  auto second = ppsn_allocate(dual, cf, 2, 1.0, Market::For, 1);
  EXPECT_EQ(second.priced_at, 0.0);
  EXPECT_DOUBLE_EQ(second.securities, first.securities);
  EXPECT_NEAR(dual.market_for.issued,
              kSecuritiesFor1 + securities_for(cf, 1.0, kSecuritiesFor1), 1e-12);
  // Once both legs hold securities the min leg prices the next allocation.
  ppsn_allocate(dual, cf, 3, 1.0, Market::Against, 2);
  auto fourth = ppsn_allocate(dual, cf, 4, 1.0, Market::For, 3);
  EXPECT_NEAR(fourth.priced_at, kSecuritiesFor1, 1e-12);
  EXPECT_LT(fourth.securities, first.securities);

  auto zero = ppsn_allocate(dual, cf, 5, 0.0, Market::Against, 4);
  EXPECT_EQ(zero.securities, 0.0);
  EXPECT_EQ(dual.market_against.ledger.size(), 1u);
}

TEST(PpsnAllocate, RejectsAfterTarget) {
  DualMarketState dual;
  dual.market_for.target = 1;
  dual.market_against.target = 1;
  dual.market_for.raised = 1;
  EXPECT_THROW(ppsn_allocate(dual, {}, 1, 1.0, Market::Against, 0), Error);
}

TEST(PpsnAllocate, LaterAllocationsNeverGetMore) {
  // R for a fixed x is non-increasing over time.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amount(0.01, 3.0);
  std::bernoulli_distribution side(0.5);
  const CostFunction cf{2.0, 0.0};
  for (int trial = 0; trial < 200; ++trial) {
    DualMarketState dual;
    dual.market_for.target = dual.market_against.target = 1e9;
    double previous_R = securities_for(cf, 1.0, 0.0);
    double previous_Q = 0.0;
    for (int t = 0; t < 20; ++t) {
      ppsn_allocate(dual, cf, t, amount(rng),
                    side(rng) ? Market::For : Market::Against, t);
      const double Q = dual.common_issued();
      const double R = securities_for(cf, 1.0, Q);
      ASSERT_LE(R, previous_R);
      if (Q > previous_Q) ASSERT_LT(R, previous_R);
      previous_R = R;
      previous_Q = Q;
    }
  }
}

TEST(Engine, TruncatesCrossingContribution) {
  const auto run = run_campaign(ppr(10, 2), {{1, 6, Market::For, 0},
                                             {2, 7, Market::For, 1}});
  EXPECT_EQ(run.verdict, Verdict::Provisioned);
  EXPECT_DOUBLE_EQ(run.markets.market_for.raised, 10);
  ASSERT_EQ(run.ledger.size(), 2u);
  EXPECT_DOUBLE_EQ(run.ledger[1].amount, 4);
  EXPECT_EQ(run.halted_at, 1);
}

TEST(Engine, NoContributionsExpire) {
  const auto run = run_campaign(ppr(10, 2), {});
  EXPECT_EQ(run.verdict, Verdict::Expired);
  EXPECT_EQ(run.markets.market_for.raised, 0);
  EXPECT_FALSE(run.halted_at.has_value());
}

TEST(Engine, HaltsAtTarget) {
  const auto run = run_campaign(ppr(10, 2), {{1, 10, Market::For, 0},
                                             {2, 3, Market::For, 1}});
  EXPECT_EQ(run.ledger.size(), 1u);
}

TEST(Engine, DualMarketRace) {
  const auto run = run_campaign(pprn(10, 5, 2), {{1, 9, Market::For, 0},
                                                 {2, 5, Market::Against, 1},
                                                 {3, 4, Market::For, 2}});
  EXPECT_EQ(run.verdict, Verdict::Rejected);
  EXPECT_DOUBLE_EQ(run.markets.market_for.raised, 9);
}

TEST(Engine, TieBreakByAgentId) {
  const auto run = run_campaign(pprn(5, 5, 2), {{1, 5, Market::Against, 3},
                                                {2, 5, Market::For, 3}});
  EXPECT_EQ(run.verdict, Verdict::Rejected);
}

TEST(Engine, RejectsBadActions) {
  EXPECT_THROW(run_campaign(ppr(10, 2), {{1, 6, Market::For, 2},
                                         {2, 7, Market::For, 1}}),
               Error);
  EXPECT_THROW(run_campaign(ppr(10, 2), {{1, -1, Market::For, 0}}), Error);
  EXPECT_THROW(run_campaign(ppr(10, 2), {{1, 1, Market::For, 11}}), Error);
  EXPECT_THROW(run_campaign(ppr(10, 2), {{1, 1, Market::Against, 0}}), Error);
  EXPECT_THROW(run_campaign(pprn(10, 5, 2), {{1, 1, Market::For, 0},
                                             {1, 1, Market::Against, 1}}),
               Error);
}

TEST(Engine, ReplayIsBitIdentical) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPSN;
  c.target_for = 7;
  c.target_against = 6;
  c.deadline_contribution = 10;
  const std::vector<Action> actions{{1, 2.5, Market::For, 0},
                                    {2, 1.5, Market::Against, 1},
                                    {3, 3.0, Market::For, 2},
                                    {4, 4.6, Market::Against, 4}};
  const auto a = run_campaign(c, actions);
  const auto b = run_campaign(c, actions);
  ASSERT_EQ(a.ledger.size(), b.ledger.size());
  for (std::size_t i = 0; i < a.ledger.size(); ++i) {
    EXPECT_EQ(a.ledger[i].securities, b.ledger[i].securities);
    EXPECT_EQ(a.ledger[i].priced_at, b.ledger[i].priced_at);
  }
  EXPECT_EQ(a.verdict, Verdict::Rejected);
}

TEST(Settle, PprRefundsSplitBudget) {
  const std::vector<AgentProfile> agents{agent(1, 10), agent(2, 3)};
  auto run = run_campaign(ppr(30, 5), {{1, 4, Market::For, 0},
                                       {2, 16, Market::For, 1}});
  auto out = settle(ppr(30, 5), agents, run);
  EXPECT_DOUBLE_EQ(out.payouts.at(1).refund, 1);
  EXPECT_DOUBLE_EQ(out.payouts.at(2).refund, 4);

  run = run_campaign(ppr(10, 5), {{1, 4, Market::For, 0},
                                  {2, 6, Market::For, 1}});
  out = settle(ppr(10, 5), agents, run);
  EXPECT_DOUBLE_EQ(out.payouts.at(1).utility, 6);
  EXPECT_DOUBLE_EQ(out.payouts.at(2).utility, -3);
}

TEST(Settle, PprnRefundBudgetConserved) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amount(0.1, 4.0);
  const auto config = pprn(1000, 1000, 7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AgentProfile> agents;
    std::vector<Action> actions;
    for (int i = 1; i <= 6; ++i) {
      agents.push_back(agent(i, i % 2 ? 5.0 : -5.0));
      actions.push_back({i, amount(rng), i % 2 ? Market::For : Market::Against, i});
    }
    const auto out = settle(config, agents, run_campaign(config, actions));
    ASSERT_EQ(out.verdict, Verdict::Expired);
    double paid = 0;
    for (const auto& [id, p] : out.payouts) paid += p.refund;
    ASSERT_NEAR(paid, 7.0, 1e-12);
  }
}

TEST(Settle, TwoPhaseNeedsRewards) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRx;
  c.provision_point = 5;
  c.contribution_budget = 5;
  c.belief_budget = 3;
  c.deadline_belief = 1;
  c.deadline_contribution = 5;
  const auto run = run_campaign(c, {});
  EXPECT_THROW(settle(c, {agent(1, 1)}, run), Error);

  BeliefAwards awards;
  awards.sides[1] = BeliefSide::ProvisionLikely;
  awards.rewards[1] = 2;
  const auto provisioned =
      run_campaign(c, {{1, 5, Market::For, 3}});
  AgentProfile a = agent(1, 10);
  const auto out = settle(c, {a}, provisioned, awards);
  EXPECT_DOUBLE_EQ(out.payouts.at(1).utility, 7);
}

}  // namespace
}  // namespace civic
