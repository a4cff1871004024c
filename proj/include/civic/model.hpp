#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "civic/cost_function.hpp"

namespace civic {

using AgentId = int;
using Tick = int;

enum class Mechanism { PPR, PPS, PPRN, PPSN, PPRx, PPSx };

// Which market a contribution goes to. Single-market mechanisms only use For.
enum class Market { For, Against };

enum class BeliefSide { ProvisionLikely, RejectionLikely };

enum class Verdict { Provisioned, Rejected, Expired };

const char* to_string(Mechanism m);
const char* to_string(Market m);
const char* to_string(BeliefSide s);
const char* to_string(Verdict v);
Mechanism parse_mechanism(const std::string& text);
Market parse_market(const std::string& text);
BeliefSide parse_belief_side(const std::string& text);

bool is_dual_market(Mechanism m);
bool is_two_phase(Mechanism m);
bool is_securities_based(Mechanism m);

struct AgentProfile {
  AgentId id = 0;
  double valuation = 0.0;
  double belief_epsilon = 0.0;
  BeliefSide belief_side = BeliefSide::ProvisionLikely;
  Tick arrival_belief = 0;
  Tick arrival_contribution = 0;

  double k1() const { return 0.5 + belief_epsilon; }
  double k2() const { return 0.5 - belief_epsilon; }

  // Subjective probability that the project gets provisioned.
  double provision_belief() const {
    return belief_side == BeliefSide::ProvisionLikely ? k1() : k2();
  }
};

// s_i: For iff valuation >= 0.
Market derive_preference(const AgentProfile& agent);

struct ValuationTotals {
  double net = 0.0;      // total_for - total_against
  double for_ = 0.0;     // sum of theta over agents with theta >= 0
  double against = 0.0;  // sum of -theta over agents with theta < 0
};

ValuationTotals aggregate_valuations(const std::vector<AgentProfile>& agents);

struct CampaignConfig {
  Mechanism mechanism = Mechanism::PPR;
  std::optional<double> provision_point;  // h0
  std::optional<double> target_for;       // h1
  std::optional<double> target_against;   // h2
  std::optional<double> refund_budget;    // B
  std::optional<double> belief_budget;    // B^B
  std::optional<double> contribution_budget;  // B^C
  Tick deadline_contribution = 0;
  std::optional<Tick> deadline_belief;
  std::optional<CostFunction> cost_params;

  // Target of a market; throws if the market is not used by the mechanism.
  double target(Market m) const;
  // Refund budget seen by the contribution phase (B or B^C).
  double refund_pool() const;
  CostFunction cost_function() const;
};

// Enforces the per-mechanism presence and positivity rules.
void validate(const CampaignConfig& config);
void validate(const AgentProfile& agent, const CampaignConfig& config);
void validate_population(const std::vector<AgentProfile>& agents,
                         const CampaignConfig& config);

struct ContributionRecord {
  AgentId agent = 0;
  double amount = 0.0;
  Tick tick = 0;
  Market market = Market::For;
  // Securities credited to the contributor (r_i, or R_i under the common
  // refund scheme). Zero for refund-budget mechanisms.
  double securities = 0.0;
  // Issued quantity the allocation was priced against (q or Q).
  double priced_at = 0.0;
};

struct Payout {
  Market side = Market::For;
  double contribution = 0.0;
  double securities = 0.0;
  double valuation_term = 0.0;
  double cost = 0.0;  // amount the project maker keeps
  double refund = 0.0;
  double belief_reward = 0.0;
  double utility = 0.0;
};

struct Outcome {
  Verdict verdict = Verdict::Expired;
  double total_for = 0.0;
  double total_against = 0.0;
  std::map<AgentId, Payout> payouts;
};

const AgentProfile& find_agent(const std::vector<AgentProfile>& agents,
                               AgentId id);

}  // namespace civic
