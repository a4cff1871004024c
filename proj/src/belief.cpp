#include "civic/belief.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "civic/error.hpp"

namespace civic {

BeliefSide side_of(const BeliefReport& report) {
  return report.information == 0 ? BeliefSide::ProvisionLikely
                                 : BeliefSide::RejectionLikely;
}

double quadratic_score(double p, int outcome) {
  require(p >= 0.0 && p <= 1.0,
          "quadratic_score: probability must lie in [0, 1]");
  require(outcome == 0 || outcome == 1, "quadratic_score: outcome is binary");
  return outcome == 1 ? 1.0 - (1.0 - p) * (1.0 - p) : 1.0 - p * p;
}

void sort_reports(std::vector<BeliefReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const BeliefReport& a, const BeliefReport& b) {
                     return std::tie(a.tick, a.agent) <
                            std::tie(b.tick, b.agent);
                   });
}

std::map<AgentId, double> rbts_scores(
    const std::vector<BeliefReport>& reports) {
  const std::size_t n = reports.size();
  require(n >= 3, "rbts_scores: RBTS requires n >= 3 reports");
  for (const auto& r : reports) {
    require(r.information == 0 || r.information == 1,
            "rbts_scores: information report must be 0 or 1");
    require(r.prediction >= 0.0 && r.prediction <= 1.0,
            "rbts_scores: prediction must lie in [0, 1]");
  }

  std::map<AgentId, double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    const BeliefReport& self = reports[i];
    const BeliefReport& ref = reports[(i + 1) % n];
    const BeliefReport& peer = reports[(i + 2) % n];
    const double delta = std::min(ref.prediction, 1.0 - ref.prediction);
    const double shifted = self.information == 1 ? ref.prediction + delta
                                                 : ref.prediction - delta;
    const double info = quadratic_score(std::clamp(shifted, 0.0, 1.0),
                                        peer.information);
    const double pred = quadratic_score(self.prediction, peer.information);
    scores[self.agent] = info + pred;
  }
  return scores;
}

std::map<AgentId, double> prefix_weights(
    const std::vector<BeliefReport>& ordered,
    const std::map<AgentId, double>& scores) {
  std::map<AgentId, double> weights;
  double prefix = 0.0;
  for (const auto& r : ordered) {
    const double m = scores.at(r.agent);
    prefix += m;
    weights[r.agent] = prefix > 0.0 ? m / prefix : 0.0;
  }
  return weights;
}

BeliefLedger score_reports(std::vector<BeliefReport> reports) {
  sort_reports(reports);
  std::set<AgentId> seen;
  for (const auto& r : reports) {
    require(seen.insert(r.agent).second,
            "belief reports: agent " + std::to_string(r.agent) +
                " reported twice");
  }
  BeliefLedger ledger;
  ledger.scores = rbts_scores(reports);
  ledger.weights = prefix_weights(reports, ledger.scores);
  ledger.reports = std::move(reports);
  return ledger;
}

namespace {

std::map<AgentId, double> split_budget(const BeliefLedger& ledger,
                                       BeliefSide side, double budget) {
  std::vector<AgentId> members;
  double total = 0.0;
  for (const auto& r : ledger.reports) {
    if (side_of(r) != side) continue;
    members.push_back(r.agent);
    total += ledger.weights.at(r.agent);
  }
  std::map<AgentId, double> out;
  for (AgentId id : members) {
    // Every member scored zero: split evenly.
    out[id] = total > 0.0 ? ledger.weights.at(id) / total * budget
                          : budget / static_cast<double>(members.size());
  }
  return out;
}

}  // namespace

void bbr_rewards(BeliefLedger& ledger, BeliefSide winning_side,
                 double budget) {
  require(budget >= 0.0, "bbr_rewards: budget must be >= 0");
  if (ledger.weights.empty() && !ledger.reports.empty()) {
    ledger.weights = prefix_weights(ledger.reports, ledger.scores);
  }
  ledger.winning_side = winning_side;
  ledger.rewards.clear();
  for (const auto& r : ledger.reports) ledger.rewards[r.agent] = 0.0;

  auto shares = split_budget(ledger, winning_side, budget);
  ledger.reward_undefined = shares.empty();
  for (const auto& [id, b] : shares) ledger.rewards[id] = b;
}

std::map<AgentId, double> conditional_rewards(const BeliefLedger& ledger,
                                              double budget) {
  std::map<AgentId, double> out;
  for (auto side : {BeliefSide::ProvisionLikely, BeliefSide::RejectionLikely}) {
    for (const auto& [id, b] : split_budget(ledger, side, budget)) out[id] = b;
  }
  return out;
}

BeliefReport truthful_report(const AgentProfile& agent) {
  BeliefReport r;
  r.agent = agent.id;
  r.information = agent.belief_side == BeliefSide::ProvisionLikely ? 0 : 1;
  r.prediction = 1.0 - agent.provision_belief();
  r.tick = agent.arrival_belief;
  return r;
}

Payout pprx_payout(BeliefSide side, double valuation, double x, double total,
                   double contribution_budget, double reward,
                   bool provisioned) {
  Payout p;
  p.contribution = x;
  if (provisioned) {
    p.valuation_term = valuation;
    p.cost = x;
    if (side == BeliefSide::ProvisionLikely) p.belief_reward = reward;
  } else {
    p.refund = total > 0.0 ? x / total * contribution_budget : 0.0;
    if (side == BeliefSide::RejectionLikely) p.belief_reward = reward;
  }
  p.utility = p.valuation_term - p.cost + p.refund + p.belief_reward;
  return p;
}

double pprx_utility(const AgentProfile& agent, double x, double total,
                    double contribution_budget, double reward,
                    bool provisioned) {
  return pprx_payout(agent.belief_side, agent.valuation, x, total,
                     contribution_budget, reward, provisioned)
      .utility;
}

Payout ppsx_payout(BeliefSide side, double valuation,
                   const ContributionRecord& rec, double reward,
                   bool provisioned) {
  Payout p;
  p.contribution = rec.amount;
  p.securities = rec.securities;
  p.cost = rec.amount;
  if (provisioned) {
    p.valuation_term = valuation;
    if (side == BeliefSide::ProvisionLikely) p.belief_reward = reward;
  } else {
    p.refund = rec.securities;
    if (side == BeliefSide::RejectionLikely) p.belief_reward = reward;
  }
  p.utility = p.valuation_term - p.cost + p.refund + p.belief_reward;
  return p;
}

double ppsx_utility(const AgentProfile& agent, const ContributionRecord& rec,
                    double reward, bool provisioned) {
  return ppsx_payout(agent.belief_side, agent.valuation, rec, reward,
                     provisioned)
      .utility;
}

TwoPhaseResult run_two_phase(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const std::vector<Action>& contributions,
                             const std::vector<BeliefReport>& reports) {
  require(is_two_phase(config.mechanism),
          "run_two_phase: mechanism must be PPRx or PPSx");
  validate(config);
  validate_population(agents, config);
  for (const auto& r : reports) {
    find_agent(agents, r.agent);
    require(r.tick >= 0 && r.tick <= *config.deadline_belief,
            "belief report of agent " + std::to_string(r.agent) +
                " falls outside the belief phase");
  }

  TwoPhaseResult result;
  result.beliefs = score_reports(reports);
  result.campaign = run_campaign(config, contributions);

  const BeliefSide winners = result.campaign.verdict == Verdict::Provisioned
                                 ? BeliefSide::ProvisionLikely
                                 : BeliefSide::RejectionLikely;
  bbr_rewards(result.beliefs, winners, *config.belief_budget);

  BeliefAwards awards;
  for (const auto& r : result.beliefs.reports) awards.sides[r.agent] = side_of(r);
  awards.rewards = result.beliefs.rewards;
  result.outcome = settle(config, agents, result.campaign, awards);
  return result;
}

}  // namespace civic
