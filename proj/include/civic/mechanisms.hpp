#pragma once

#include <map>
#include <optional>
#include <vector>

#include "civic/cost_function.hpp"
#include "civic/model.hpp"

namespace civic {

// One provision-point market. `raised` and `issued` always equal the sums
// over `ledger`.
struct MarketState {
  double target = 0.0;
  double raised = 0.0;
  double issued = 0.0;
  std::vector<ContributionRecord> ledger;

  bool reached() const { return raised >= target; }
  double remaining() const { return target > raised ? target - raised : 0.0; }
};

// Two independent markets linked only by the common refund scheme, which
// prices every allocation against Q = min(issued_for, issued_against).
struct DualMarketState {
  MarketState market_for;
  MarketState market_against;

  MarketState& market(Market m) {
    return m == Market::For ? market_for : market_against;
  }
  const MarketState& market(Market m) const {
    return m == Market::For ? market_for : market_against;
  }
  double common_issued() const;
};

// --- utilities -------------------------------------------------------------
//
// Each *_payout returns the realized utility split into its components;
// the matching *_utility returns only the total.

Payout ppr_payout(double valuation, double x, double total, double budget,
                  bool provisioned);
double ppr_utility(const AgentProfile& agent, double x, double total,
                   double budget, bool provisioned);

Payout pps_payout(double valuation, const ContributionRecord& rec,
                  bool provisioned);
double pps_utility(const AgentProfile& agent, const ContributionRecord& rec,
                   bool provisioned);

// `reported` is the market the agent contributed to. Expired pays the
// refund branch on both sides and no valuation term.
Payout pprn_payout(double valuation, Market reported, double x,
                   double total_for, double total_against, double budget,
                   Verdict verdict);
double pprn_utility(const AgentProfile& agent, Market reported, double x,
                    double total_for, double total_against, double budget,
                    Verdict verdict);

Payout ppsn_payout(double valuation, const ContributionRecord& rec,
                   Verdict verdict);
double ppsn_utility(const AgentProfile& agent, const ContributionRecord& rec,
                    Verdict verdict);

// --- allocation and engine -------------------------------------------------

ContributionRecord ppsn_allocate(DualMarketState& dual, const CostFunction& cf,
                                 AgentId agent, double x, Market market,
                                 Tick tick);

struct Action {
  AgentId agent = 0;
  double amount = 0.0;
  Market market = Market::For;
  Tick tick = 0;
};

bool action_order(const Action& a, const Action& b);

struct CampaignRun {
  Verdict verdict = Verdict::Expired;
  DualMarketState markets;  // single-market mechanisms only use market_for
  std::vector<ContributionRecord> ledger;  // processing order
  // Tick at which the campaign halted; nullopt when it ran to the deadline.
  std::optional<Tick> halted_at;
};

// Processes time-ordered actions until a target is reached. The contribution
// that crosses a target is truncated so the market lands exactly on it.
CampaignRun run_campaign(const CampaignConfig& config,
                         const std::vector<Action>& actions);

// Belief-phase outputs needed to settle PPRx / PPSx.
struct BeliefAwards {
  std::map<AgentId, BeliefSide> sides;   // from the information report
  std::map<AgentId, double> rewards;     // realized BBR shares
};

Outcome settle(const CampaignConfig& config,
               const std::vector<AgentProfile>& agents, const CampaignRun& run,
               const std::optional<BeliefAwards>& awards = std::nullopt);

}  // namespace civic
