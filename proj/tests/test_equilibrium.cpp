#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "civic/equilibrium.hpp"
#include "civic/error.hpp"

namespace civic {
namespace {

AgentProfile agent(AgentId id, double valuation, Tick arrival = 0,
                   BeliefSide side = BeliefSide::ProvisionLikely,
                   double epsilon = 0.0) {
  AgentProfile a;
  a.id = id;
  a.valuation = valuation;
  a.belief_side = side;
  a.belief_epsilon = epsilon;
  a.arrival_contribution = arrival;
  return a;
}

const CostFunction kUnit{};

TEST(Bounds, Pprn) {
  EXPECT_NEAR(bound_pprn(agent(1, 10), 50, 50, 10), 100.0 / 110 * 10, 1e-12);
  EXPECT_NEAR(bound_pprn(agent(1, -10), 50, 50, 1e-12), 10, 1e-9);
  EXPECT_EQ(bound_pprn(agent(1, 0), 50, 50, 10), 0);
}

TEST(Bounds, Ppsn) {
  EXPECT_NEAR(bound_ppsn(agent(1, 1), kUnit, 0), 0.620114506958278, 1e-13);
  EXPECT_NEAR(securities_for(kUnit, bound_ppsn(agent(1, 1), kUnit, 0), 0), 1.0,
              1e-9);
  EXPECT_EQ(bound_ppsn(agent(1, 0), kUnit, 0), 0);
  // C0 is convex, so the same securities cost more once more are issued.
  EXPECT_GT(bound_ppsn(agent(1, 1), kUnit, 10), bound_ppsn(agent(1, 1), kUnit, 0));
}

TEST(Bounds, Pprx) {
  EXPECT_NEAR(bound_pprx(agent(1, 10), 20, 5, 2), 9.6, 1e-12);
  EXPECT_NEAR(
      bound_pprx(agent(1, 10, 0, BeliefSide::RejectionLikely), 20, 5, 0), 8.0,
      1e-12);
  EXPECT_EQ(bound_pprx(agent(1, 1, 0, BeliefSide::RejectionLikely), 20, 5, 3),
            0.0);
}

TEST(Bounds, Ppsx) {
  EXPECT_NEAR(bound_ppsx(agent(1, 1), kUnit, 0, 0), 0.620114506958278, 1e-13);
  const AgentProfile plus = agent(1, 10);
  const AgentProfile minus = agent(2, 10, 0, BeliefSide::RejectionLikely);
  EXPECT_NEAR(bound_ppsx(plus, kUnit, 0, 2), 11.3068589636335, 1e-12);
  EXPECT_NEAR(bound_ppsx(minus, kUnit, 0, 2), 7.30718822581295, 1e-12);
  EXPECT_EQ(bound_ppsx(plus, kUnit, 0, 0), bound_ppsx(minus, kUnit, 0, 0));
  EXPECT_EQ(bound_ppsx(minus, kUnit, 0, 20), 0.0);
}

TEST(Bounds, RejectionCapSitsAtIndifference) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPSx;
  c.provision_point = 5;
  c.contribution_budget = 1;
  c.belief_budget = 3;
  c.deadline_belief = 1;
  c.deadline_contribution = 4;
  c.cost_params = kUnit;
  const AgentProfile minus = agent(1, 10, 2, BeliefSide::RejectionLikely, 0.2);
  const double cap = ppsx_rejection_cap(minus, kUnit, 0, 2);
  const auto at_cap = branch_values(c, minus, cap, 0, 2);
  EXPECT_NEAR(at_cap.success, at_cap.failure, 1e-9);
  EXPECT_LT(cap, bound_ppsx(minus, kUnit, 0, 2));

  // At the wider bound, failing the campaign pays more than provision.
  const auto at_bound = branch_values(c, minus, bound_ppsx(minus, kUnit, 0, 2), 0, 2);
  EXPECT_LT(at_bound.success, at_bound.failure - 0.1);
}

// Each bound is the contribution where both branches are worth the same.
TEST(Bounds, IndifferenceAtBound) {
  struct Case {
    CampaignConfig config;
    AgentProfile agent;
    double priced_at;
    double reward;
  };
  std::vector<Case> cases;

  CampaignConfig ppr;
  ppr.mechanism = Mechanism::PPR;
  ppr.provision_point = 20;
  ppr.refund_budget = 5;
  ppr.deadline_contribution = 3;
  cases.push_back({ppr, agent(1, 10), 0, 0});

  CampaignConfig pps;
  pps.mechanism = Mechanism::PPS;
  pps.provision_point = 5;
  pps.deadline_contribution = 3;
  pps.cost_params = CostFunction{2.0, 0.0};
  cases.push_back({pps, agent(1, 3), 1.5, 0});

  CampaignConfig pprn;
  pprn.mechanism = Mechanism::PPRN;
  pprn.target_for = 50;
  pprn.target_against = 40;
  pprn.refund_budget = 10;
  pprn.deadline_contribution = 3;
  cases.push_back({pprn, agent(1, 10), 0, 0});
  cases.push_back({pprn, agent(2, -7), 0, 0});

  CampaignConfig ppsn = pprn;
  ppsn.mechanism = Mechanism::PPSN;
  ppsn.refund_budget.reset();
  ppsn.cost_params = CostFunction{5.0, 0.0};
  cases.push_back({ppsn, agent(1, 4), 2.0, 0});
  cases.push_back({ppsn, agent(2, -3), 0.5, 0});

  CampaignConfig pprx;
  pprx.mechanism = Mechanism::PPRx;
  pprx.provision_point = 20;
  pprx.contribution_budget = 5;
  pprx.belief_budget = 4;
  pprx.deadline_belief = 1;
  pprx.deadline_contribution = 4;
  for (double eps : {0.0, 0.1, 0.3}) {
    cases.push_back({pprx, agent(1, 10, 2, BeliefSide::ProvisionLikely, eps), 0, 2});
    cases.push_back({pprx, agent(2, 10, 2, BeliefSide::RejectionLikely, eps), 0, 1});
  }

  CampaignConfig ppsx = pprx;
  ppsx.mechanism = Mechanism::PPSx;
  ppsx.cost_params = kUnit;
  cases.push_back({ppsx, agent(1, 6, 2, BeliefSide::ProvisionLikely, 0.0), 1.0, 1.5});
  cases.push_back({ppsx, agent(2, 6, 2, BeliefSide::RejectionLikely, 0.0), 1.0, 1.5});

  for (const auto& c : cases) {
    const double x = equilibrium_bound(c.config, c.agent, c.priced_at, c.reward);
    ASSERT_GT(x, 0.0);
    const auto v = branch_values(c.config, c.agent, x, c.priced_at, c.reward);
    EXPECT_LE(std::abs(v.success - v.failure),
              1e-6 * std::max(1.0, std::abs(v.success)))
        << to_string(c.config.mechanism) << " agent " << c.agent.id;
  }

  // The securities bound carries no belief weights, so with epsilon > 0 a
  // provision-likely agent strictly prefers success at its bound.
  const auto plus = agent(1, 6, 2, BeliefSide::ProvisionLikely, 0.2);
  const double x = equilibrium_bound(ppsx, plus, 1.0, 1.5);
  const auto v = branch_values(ppsx, plus, x, 1.0, 1.5);
  EXPECT_GT(v.success, v.failure);
}

TEST(Conditions, PprnBudgetBounds) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRN;
  c.target_for = 50;
  c.target_against = 40;
  c.refund_budget = 10;
  c.deadline_contribution = 3;
  const auto checks = check_conditions(
      c, {agent(1, 60), agent(2, 40), agent(3, -30), agent(4, -30)});
  EXPECT_TRUE(all_satisfied(checks));
  std::vector<double> budget_bounds;
  for (const auto& ch : checks) {
    if (ch.lhs == 10) budget_bounds.push_back(ch.rhs);
  }
  ASSERT_EQ(budget_bounds.size(), 2u);
  EXPECT_NEAR(budget_bounds[0], 90, 1e-12);
  EXPECT_NEAR(budget_bounds[1], 45, 1e-12);
}

TEST(Conditions, PprxBeliefBudget) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRx;
  c.provision_point = 20;
  c.contribution_budget = 5;
  c.belief_budget = 10;
  c.deadline_belief = 1;
  c.deadline_contribution = 4;
  std::vector<AgentProfile> agents{agent(1, 5, 2), agent(2, 5, 2), agent(3, 5, 2)};
  EXPECT_TRUE(all_satisfied(check_conditions(c, agents)));
  c.provision_point = 26;
  EXPECT_FALSE(all_satisfied(check_conditions(c, agents)));
}

TEST(Conditions, PpsnCostInverse) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPSN;
  c.target_for = 5;
  c.target_against = 1;
  c.deadline_contribution = 3;
  c.cost_params = kUnit;
  const auto checks = check_conditions(c, {agent(1, 4), agent(2, -3)});
  EXPECT_FALSE(all_satisfied(checks));
  bool found = false;
  for (const auto& ch : checks) {
    if (!ch.satisfied) {
      EXPECT_NEAR(ch.lhs, 5.68977251929, 1e-10);
      EXPECT_EQ(ch.rhs, 4);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

CampaignConfig ppr_config(double h0, double budget) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPR;
  c.provision_point = h0;
  c.refund_budget = budget;
  c.deadline_contribution = 5;
  return c;
}

TEST(Profile, EqualBoundsSplitEvenly) {
  // theta * h0 / (B + h0) = 12 * 12 / 15 = 9.6 for both agents.
  const auto p = construct_profile(ppr_config(12, 3), {agent(1, 12), agent(2, 12)});
  ASSERT_EQ(p.entries.size(), 2u);
  for (const auto& e : p.entries) {
    EXPECT_NEAR(e.bound, 9.6, 1e-12);
    EXPECT_NEAR(e.amount, 6.0, 1e-12);
    EXPECT_EQ(e.tick, 5);
  }
  EXPECT_EQ(profile_total(p, Market::For), 12.0);
}

TEST(Profile, SingleAgentFillsTarget) {
  const auto p = construct_profile(ppr_config(10, 1), {agent(1, 20)});
  EXPECT_EQ(p.entries.at(0).amount, 10.0);
}

TEST(Profile, InfeasibleWhenBoundsTooSmall) {
  try {
    construct_profile(ppr_config(10, 1), {agent(1, 9)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
  }
}

CampaignConfig pprn_config(double budget) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRN;
  c.target_for = 50;
  c.target_against = 40;
  c.refund_budget = budget;
  c.deadline_contribution = 3;
  return c;
}

TEST(Profile, PprnLargerSideWinsRace) {
  const CampaignConfig c = pprn_config(10);
  std::vector<AgentProfile> agents{agent(1, 60), agent(2, 40), agent(3, -30),
                                   agent(4, -30)};
  auto p = construct_profile(c, agents);
  EXPECT_NEAR(profile_total(p, Market::For), 50, 1e-12);
  EXPECT_NEAR(profile_total(p, Market::Against), 40, 1e-12);
  EXPECT_EQ(run_campaign(c, profile_actions(p)).verdict, Verdict::Provisioned);

  agents = {agent(1, 30), agent(2, 30), agent(3, -60), agent(4, -40)};
  p = construct_profile(c, agents);
  EXPECT_EQ(run_campaign(c, profile_actions(p)).verdict, Verdict::Rejected);
}

TEST(Certify, PprnProfileIsEquilibrium) {
  const CampaignConfig c = pprn_config(10);
  const std::vector<AgentProfile> agents{agent(1, 60), agent(2, 40),
                                         agent(3, -30), agent(4, -30)};
  const auto report = certify_ne(c, agents, construct_profile(c, agents));
  EXPECT_TRUE(report.certified);
  EXPECT_TRUE(report.deviations.empty());
  EXPECT_GT(report.evaluations, 0u);
}

TEST(Certify, PprnLargeBudgetInvitesShaving) {
  // B = 100 breaks both budget conditions (90 and 45).
  const CampaignConfig c = pprn_config(100);
  const std::vector<AgentProfile> agents{agent(1, 60), agent(2, 40),
                                         agent(3, -30), agent(4, -30)};
  EXPECT_FALSE(all_satisfied(check_conditions(c, agents)));
  EXPECT_THROW(construct_profile(c, agents), Error);
  const auto report = certify_ne(c, agents, forced_profile(c, agents));
  EXPECT_FALSE(report.certified);
  ASSERT_FALSE(report.deviations.empty());
  bool shaved = false;
  for (const auto& d : report.deviations) {
    const auto& e = *std::find_if(
        report.profile.entries.begin(), report.profile.entries.end(),
        [&](const ProfileEntry& pe) { return pe.agent == d.agent; });
    if (d.amount < e.amount) shaved = true;
  }
  EXPECT_TRUE(shaved);
}

TEST(Certify, PprNegativeControl) {
  // B >= total valuation - h0.
  const CampaignConfig c = ppr_config(10, 15);
  const std::vector<AgentProfile> agents{agent(1, 12), agent(2, 12)};
  EXPECT_FALSE(all_satisfied(check_conditions(c, agents)));
  EXPECT_FALSE(certify_ne(c, agents, forced_profile(c, agents)).certified);
}

TEST(Certify, PprxNegativeControl) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPRx;
  c.provision_point = 40;
  c.contribution_budget = 5;
  c.belief_budget = 4;
  c.deadline_belief = 1;
  c.deadline_contribution = 4;
  std::vector<AgentProfile> agents{agent(1, 10, 2), agent(2, 10, 2),
                                   agent(3, 10, 2)};
  for (int i = 0; i < 3; ++i) agents[i].arrival_belief = i % 2;
  EXPECT_FALSE(all_satisfied(check_conditions(c, agents)));
  EXPECT_FALSE(certify_ne(c, agents, forced_profile(c, agents)).certified);
}

TEST(Certify, PpsnNegativeControl) {
  CampaignConfig c;
  c.mechanism = Mechanism::PPSN;
  c.target_for = 5;
  c.target_against = 1;
  c.deadline_contribution = 3;
  c.cost_params = kUnit;
  const std::vector<AgentProfile> agents{agent(1, 2), agent(2, 2, 1),
                                         agent(3, -3)};
  EXPECT_FALSE(all_satisfied(check_conditions(c, agents)));
  EXPECT_FALSE(certify_ne(c, agents, forced_profile(c, agents)).certified);
}

CampaignConfig ppsn_config() {
  CampaignConfig c;
  c.mechanism = Mechanism::PPSN;
  c.target_for = 3;
  c.target_against = 3;
  c.deadline_contribution = 4;
  c.cost_params = kUnit;
  return c;
}

std::vector<AgentProfile> ppsn_agents() {
  return {agent(1, 4, 0), agent(2, 3, 1), agent(3, -4, 0), agent(4, -3, 2),
          agent(5, 2, 3)};
}

TEST(Spe, ConstructedPpsnProfile) {
  const auto c = ppsn_config();
  const auto agents = ppsn_agents();
  ASSERT_TRUE(all_satisfied(check_conditions(c, agents)));
  const auto p = construct_profile(c, agents);
  const auto report = certify_spe(c, agents, p);
  EXPECT_TRUE(report.certified);
  EXPECT_FALSE(report.partial);
  EXPECT_EQ(report.kind, "SPE");
  for (AgentId id : {1, 2, 3, 4, 5}) {
    EXPECT_NEAR(preference_flip_delta(c, agents, p, id), 0.0, 1e-9);
  }
}

TEST(Spe, LateArrivalPlaysRemainderThenZero) {
  const auto c = ppsn_config();
  const auto agents = ppsn_agents();
  // Agent 2's bound exceeds the remaining 1, so it pays exactly the
  // remainder; agent 5 arrives after the target is met and pays nothing.
  const auto p = profile_from_actions(c, agents,
                                      {{1, 2, Market::For, 0},
                                       {2, 1, Market::For, 1},
                                       {3, 2, Market::Against, 0},
                                       {4, 1, Market::Against, 2},
                                       {5, 0, Market::For, 3}},
                                      {});
  const auto& second = p.entries.at(2);
  ASSERT_EQ(second.agent, 2);
  EXPECT_GT(second.bound, 1.0);
  EXPECT_TRUE(certify_spe(c, agents, p).certified);

  // Stopping short of the remainder is not a best response.
  const auto shy = profile_from_actions(c, agents,
                                        {{1, 2, Market::For, 0},
                                         {2, 0.5, Market::For, 1},
                                         {3, 2, Market::Against, 0},
                                         {4, 1, Market::Against, 2},
                                         {5, 0, Market::For, 3}},
                                        {});
  const auto report = certify_spe(c, agents, shy);
  EXPECT_FALSE(report.certified);
  bool agent2 = false;
  for (const auto& d : report.deviations) agent2 |= d.agent == 2;
  EXPECT_TRUE(agent2);
}

TEST(Spe, RejectsRefundMechanisms) {
  const CampaignConfig c = ppr_config(10, 1);
  const std::vector<AgentProfile> agents{agent(1, 20)};
  EXPECT_THROW(certify_spe(c, agents, construct_profile(c, agents)), Error);
}

TEST(Ordering, GapPositiveOnGrid) {
  OrderingContext pprx{Mechanism::PPRx, 20, 5, kUnit, 0, 2};
  OrderingContext ppsx{Mechanism::PPSx, 20, 5, kUnit, 0, 2};
  for (int i = 1; i <= 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double theta = 2.0 * i;
      const double eps = 0.04 * j;
      const auto plus = agent(1, theta, 0, BeliefSide::ProvisionLikely, eps);
      const auto minus = agent(2, theta, 0, BeliefSide::RejectionLikely, eps);
      ASSERT_GT(contribution_ordering_gap(plus, minus, pprx).gap, 0.0);
      ASSERT_GT(contribution_ordering_gap(plus, minus, ppsx).gap, 0.0);
    }
  }
}

TEST(Ordering, Examples) {
  const auto plus = agent(1, 10, 0, BeliefSide::ProvisionLikely, 0.1);
  const auto minus = agent(2, 10, 0, BeliefSide::RejectionLikely, 0.1);
  OrderingContext ppsx{Mechanism::PPSx, 20, 5, kUnit, 0, 2};
  const auto g = contribution_ordering_gap(agent(1, 10), agent(2, 10, 0, BeliefSide::RejectionLikely), ppsx);
  EXPECT_NEAR(g.gap, contribution_for(kUnit, 12, 0) - contribution_for(kUnit, 8, 0),
              1e-12);
  OrderingContext flat{Mechanism::PPRx, 20, 5, kUnit, 0, 0};
  EXPECT_EQ(contribution_ordering_gap(agent(1, 10),
                                      agent(2, 10, 0, BeliefSide::RejectionLikely), flat)
                .gap,
            0.0);
  EXPECT_GT(contribution_ordering_gap(plus, minus, flat).gap, 0.0);
  EXPECT_THROW(contribution_ordering_gap(plus, agent(2, 9, 0, BeliefSide::RejectionLikely, 0.1), flat),
               Error);
}

TEST(CombinedGap, Examples) {
  const auto plus = agent(1, 10, 0, BeliefSide::ProvisionLikely, 0.1);
  EXPECT_NEAR(combined_mechanism_gap(plus, 3), -0.6, 1e-12);
  EXPECT_EQ(combined_mechanism_gap(agent(1, 10), 3), 0.0);
  EXPECT_EQ(combined_mechanism_gap(plus, 0), 0.0);
  const auto minus = agent(2, -10, 0, BeliefSide::RejectionLikely, 0.1);
  EXPECT_NEAR(combined_mechanism_gap(minus, 3), 0.6, 1e-12);
}

}  // namespace
}  // namespace civic
