#pragma once

#include <map>
#include <optional>
#include <vector>

#include "civic/mechanisms.hpp"
#include "civic/model.hpp"

namespace civic {

// Binary RBTS report. information = 0 means "believes the project will be
// provisioned", 1 means "believes it will not".
struct BeliefReport {
  AgentId agent = 0;
  int information = 0;
  double prediction = 0.5;
  Tick tick = 0;
};

BeliefSide side_of(const BeliefReport& report);

struct BeliefLedger {
  std::vector<BeliefReport> reports;  // ordered by (tick, agent)
  std::map<AgentId, double> scores;
  std::map<AgentId, double> weights;
  std::map<AgentId, double> rewards;
  std::optional<BeliefSide> winning_side;
  // Set when the winning side had no members, so no reward was paid.
  bool reward_undefined = false;
};

// Quadratic scoring rule normalized to [0, 1].
double quadratic_score(double p, int outcome);

void sort_reports(std::vector<BeliefReport>& reports);

// RBTS with reference j = i+1 and peer k = i+2 (mod n) taken in the order
// the reports are given. Each score lies in [0, 2].
std::map<AgentId, double> rbts_scores(const std::vector<BeliefReport>& reports);

// w_i = M_i / sum of M_j over everyone who reported at or before i.
std::map<AgentId, double> prefix_weights(
    const std::vector<BeliefReport>& ordered,
    const std::map<AgentId, double>& scores);

// Fills weights and rewards. Only the winning side is paid; its shares sum to
// the budget.
void bbr_rewards(BeliefLedger& ledger, BeliefSide winning_side, double budget);

// Builds a ledger from raw reports: sorts, scores and weights them.
BeliefLedger score_reports(std::vector<BeliefReport> reports);

// Reward each agent would receive if its own side won. This is the b_i an
// agent plans its contribution around.
std::map<AgentId, double> conditional_rewards(const BeliefLedger& ledger,
                                              double budget);

// Report an agent with the given belief files when telling the truth: its
// side as the information bit and its probability of non-provision as the
// prediction, at its arrival tick.
BeliefReport truthful_report(const AgentProfile& agent);

Payout pprx_payout(BeliefSide side, double valuation, double x, double total,
                   double contribution_budget, double reward, bool provisioned);
double pprx_utility(const AgentProfile& agent, double x, double total,
                    double contribution_budget, double reward,
                    bool provisioned);

Payout ppsx_payout(BeliefSide side, double valuation,
                   const ContributionRecord& rec, double reward,
                   bool provisioned);
double ppsx_utility(const AgentProfile& agent, const ContributionRecord& rec,
                    double reward, bool provisioned);

struct TwoPhaseResult {
  BeliefLedger beliefs;
  CampaignRun campaign;
  Outcome outcome;
};

// Belief Phase (reports scored by RBTS) followed by the PPR or PPS
// Contribution Phase; the verdict picks the rewarded side.
TwoPhaseResult run_two_phase(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const std::vector<Action>& contributions,
                             const std::vector<BeliefReport>& reports);

}  // namespace civic
