#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "civic/belief.hpp"
#include "civic/cost_function.hpp"
#include "civic/mechanisms.hpp"
#include "civic/model.hpp"

namespace civic {

// --- bounds ------------------------------------------------------------------
//
// Upper bounds on an agent's equilibrium contribution. Negative numerators
// are clamped to zero.

double bound_pprn(const AgentProfile& agent, double h1, double h2,
                  double budget);
double bound_ppsn(const AgentProfile& agent, const CostFunction& cf, double Q);
double bound_pprx(const AgentProfile& agent, double h0,
                  double contribution_budget, double reward);
double bound_ppsx(const AgentProfile& agent, const CostFunction& cf, double q,
                  double reward);

// Largest x at which a rejection-likely PPSx agent still weakly prefers
// provision: k2 (theta - x) = k1 (r(x) - x + b). Below bound_ppsx when
// epsilon > 0.
double ppsx_rejection_cap(const AgentProfile& agent, const CostFunction& cf,
                          double q, double reward);

// Bound for any mechanism. PPR and PPS use the two-phase formulas with
// epsilon = 0 and no reward. `priced_at` is q or Q, ignored by refund-budget
// mechanisms.
double equilibrium_bound(const CampaignConfig& config, const AgentProfile& agent,
                     double priced_at, double reward);

// Belief-weighted utilities of the two branches when the agent contributes x
// and its market lands exactly on its target.
struct BranchValues {
  double success = 0.0;
  double failure = 0.0;
};
BranchValues branch_values(const CampaignConfig& config,
                           const AgentProfile& agent, double x,
                           double priced_at, double reward);

// --- existence conditions --------------------------------------------------

struct ConditionCheck {
  std::string name;
  bool satisfied = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

std::vector<ConditionCheck> check_conditions(
    const CampaignConfig& config, const std::vector<AgentProfile>& agents);
bool all_satisfied(const std::vector<ConditionCheck>& checks);

// --- profiles ----------------------------------------------------------------

struct ProfileEntry {
  AgentId agent = 0;
  double amount = 0.0;
  Tick tick = 0;
  Market market = Market::For;
  double bound = 0.0;  // equilibrium bound at the agent's slot
  double limit = 0.0;  // bound actually used when scaling (<= bound)
};

struct Profile {
  std::vector<ProfileEntry> entries;  // sorted by (tick, agent)
  std::vector<BeliefReport> reports;  // two-phase mechanisms only
  // Reward each agent receives if its belief side wins.
  std::map<AgentId, double> rewards;
  double scale_for = 0.0;
  double scale_against = 0.0;
};

// Strict-interior margin on every bound.
constexpr double kBoundMargin = 1e-9;

// Scales each agent's bound by a common factor per market so every used
// market meets its target exactly. Throws Infeasible when the bounds cannot
// cover a target.
Profile construct_profile(const CampaignConfig& config,
                          const std::vector<AgentProfile>& agents);

// Fills each target in proportion to |theta| + b, ignoring the bounds.
Profile forced_profile(const CampaignConfig& config,
                       const std::vector<AgentProfile>& agents);

// Wraps explicit actions (and reports) so they can be certified.
Profile profile_from_actions(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const std::vector<Action>& actions,
                             const std::vector<BeliefReport>& reports);

std::vector<Action> profile_actions(const Profile& profile);

double profile_total(const Profile& profile, Market market);

// --- certification -----------------------------------------------------------

struct Deviation {
  AgentId agent = 0;
  double amount = 0.0;
  Tick tick = 0;
  Market market = Market::For;
  double gain = 0.0;
  // Own-market total raised before the agent moved (SPE checks only).
  std::optional<double> state_total;
};

struct CertifyOptions {
  std::optional<double> grid_step;  // default target / 1000
  std::optional<double> epsilon;    // default 1e-6 * target
  int spe_grid_points = 200;
  std::size_t evaluation_cap = 50'000'000;
};

struct EquilibriumReport {
  std::string kind;  // "NE" or "SPE"
  double grid_step = 0.0;
  double epsilon = 0.0;
  std::map<AgentId, double> bounds;
  Profile profile;
  std::vector<ConditionCheck> conditions;
  // Best profitable deviation per agent (and per state for SPE).
  std::vector<Deviation> deviations;
  std::size_t profitable_count = 0;
  std::size_t evaluations = 0;
  bool certified = false;
  bool partial = false;
  std::size_t explored_agents = 0;
};

// Smallest target among the markets the mechanism uses.
double reference_target(const CampaignConfig& config);

// Belief-weighted payoff of one action against the rest of the profile.
double deviation_payoff(const CampaignConfig& config,
                        const std::vector<AgentProfile>& agents,
                        const Profile& profile, AgentId agent, double amount,
                        Tick tick, Market market);

EquilibriumReport certify_ne(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const Profile& profile,
                             const CertifyOptions& options = {});

// One-shot deviation check over arrival order for PPS, PPSN and PPSx. Later
// arrivals keep their profile amounts; at each grid state the threshold
// strategy and the profile action must be grid best responses.
EquilibriumReport certify_spe(const CampaignConfig& config,
                              const std::vector<AgentProfile>& agents,
                              const Profile& profile,
                              const CertifyOptions& options = {});

// PPSN: expected utility of switching market minus staying, with 1/2-1/2
// beliefs, at the agent's profile contribution.
double preference_flip_delta(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const Profile& profile, AgentId agent);

struct OrderingContext {
  Mechanism mechanism = Mechanism::PPRx;
  double provision_point = 0.0;
  double contribution_budget = 0.0;
  CostFunction cost;
  double q = 0.0;
  double reward = 0.0;
};

struct OrderingGap {
  double plus = 0.0;
  double minus = 0.0;
  double gap = 0.0;
};

// Bound of a provision-likely agent minus that of its matched
// rejection-likely twin.
OrderingGap contribution_ordering_gap(const AgentProfile& plus,
                                      const AgentProfile& minus,
                                      const OrderingContext& ctx);

// Naive PPSN + BBR: expected utility of contributing For minus Against for
// an agent holding R refund securities, (k2 - k1) R for provision-likely
// agents and the mirror for rejection-likely ones.
double combined_mechanism_gap(const AgentProfile& agent, double R);

}  // namespace civic
