#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "civic/equilibrium.hpp"
#include "civic/error.hpp"

namespace civic {

namespace {

struct Slot {
  const AgentProfile* agent = nullptr;
  Tick tick = 0;
  Market market = Market::For;
  double reward = 0.0;
};

// The side with the larger aggregate valuation; ties go to For.
Market leading_market(const std::vector<AgentProfile>& agents) {
  const ValuationTotals t = aggregate_valuations(agents);
  return t.for_ >= t.against ? Market::For : Market::Against;
}

Tick equilibrium_tick(const CampaignConfig& config, const AgentProfile& agent,
                      Market market, Market leader) {
  const Tick deadline = config.deadline_contribution;
  switch (config.mechanism) {
    case Mechanism::PPR:
    case Mechanism::PPRx:
      return deadline;
    case Mechanism::PPRN:
      // Both sides delay to the deadline; the leading side moves one tick
      // earlier so the race resolves in its favour.
      return market == leader && deadline > 0 ? deadline - 1 : deadline;
    case Mechanism::PPS:
    case Mechanism::PPSN:
    case Mechanism::PPSx:
      return agent.arrival_contribution;
  }
  return deadline;
}

void sort_entries(std::vector<ProfileEntry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) {
              return std::tie(a.tick, a.agent) < std::tie(b.tick, b.agent);
            });
}

void attach_beliefs(const CampaignConfig& config,
                    const std::vector<AgentProfile>& agents,
                    std::vector<BeliefReport> reports, Profile& profile) {
  if (!is_two_phase(config.mechanism)) return;
  if (reports.empty()) {
    for (const auto& a : agents) reports.push_back(truthful_report(a));
  }
  const BeliefLedger ledger = score_reports(reports);
  profile.reports = ledger.reports;
  profile.rewards = conditional_rewards(ledger, *config.belief_budget);
}

std::vector<Slot> make_slots(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const Profile& profile) {
  const Market leader = leading_market(agents);
  std::vector<Slot> slots;
  for (const auto& a : agents) {
    Slot s;
    s.agent = &a;
    s.market = is_dual_market(config.mechanism) ? derive_preference(a)
                                                : Market::For;
    s.tick = equilibrium_tick(config, a, s.market, leader);
    if (auto it = profile.rewards.find(a.id); it != profile.rewards.end()) {
      s.reward = it->second;
    }
    slots.push_back(s);
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return std::tie(a.tick, a.agent->id) < std::tie(b.tick, b.agent->id);
  });
  return slots;
}

// Issued quantity an allocation is priced against, given what each market
// has raised so far.
double price_point(const CampaignConfig& config, const CostFunction& cf,
                   Market market, double raised_for, double raised_against) {
  if (!is_securities_based(config.mechanism)) return 0.0;
  if (config.mechanism == Mechanism::PPSN) {
    return std::min(issued_after(cf, raised_for),
                    issued_after(cf, raised_against));
  }
  return issued_after(cf, market == Market::For ? raised_for : raised_against);
}

// Entries for the given per-market scale factors. Bounds are re-evaluated in
// order because securities prices move with earlier contributions.
std::vector<ProfileEntry> scaled_entries(const CampaignConfig& config,
                                         const std::vector<Slot>& slots,
                                         double scale_for,
                                         double scale_against) {
  const CostFunction cf = config.cost_function();
  double raised_for = 0.0;
  double raised_against = 0.0;
  std::vector<ProfileEntry> entries;
  entries.reserve(slots.size());
  for (const Slot& s : slots) {
    const double priced =
        price_point(config, cf, s.market, raised_for, raised_against);
    ProfileEntry e;
    e.agent = s.agent->id;
    e.tick = s.tick;
    e.market = s.market;
    e.bound = equilibrium_bound(config, *s.agent, priced, s.reward);
    e.limit = e.bound;
    if (config.mechanism == Mechanism::PPSx &&
        s.agent->belief_side == BeliefSide::RejectionLikely) {
      e.limit = std::min(e.bound,
                         ppsx_rejection_cap(*s.agent, cf, priced, s.reward));
    }
    e.amount = (s.market == Market::For ? scale_for : scale_against) * e.limit;
    (s.market == Market::For ? raised_for : raised_against) += e.amount;
    entries.push_back(e);
  }
  return entries;
}

double market_total(const std::vector<ProfileEntry>& entries, Market m) {
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.market == m) total += e.amount;
  }
  return total;
}

// Smallest scale in [0, cap] that fills `market`, holding the other scale.
double solve_scale(const CampaignConfig& config, const std::vector<Slot>& slots,
                   Market market, double other_scale, double target) {
  const double cap = 1.0 - kBoundMargin;
  auto total_at = [&](double c) {
    const double f = market == Market::For ? c : other_scale;
    const double a = market == Market::For ? other_scale : c;
    return market_total(scaled_entries(config, slots, f, a), market);
  };
  const double reachable = total_at(cap);
  if (reachable < target) {
    fail(ErrorKind::Infeasible,
         std::string("profile: bounds in market '") + to_string(market) +
             "' sum to " + std::to_string(reachable) + ", below target " +
             std::to_string(target));
  }
  double lo = 0.0;
  double hi = cap;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (total_at(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

// Moves the rounding residual onto the market's last contributor so the
// market total equals its target.
void close_residual(std::vector<ProfileEntry>& entries, Market m,
                    double target) {
  const double residual = target - market_total(entries, m);
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->market == m && it->amount > 0.0) {
      it->amount = std::max(0.0, it->amount + residual);
      return;
    }
  }
}

}  // namespace

Profile construct_profile(const CampaignConfig& config,
                          const std::vector<AgentProfile>& agents) {
  validate(config);
  validate_population(agents, config);
  Profile profile;
  attach_beliefs(config, agents, {}, profile);
  const std::vector<Slot> slots = make_slots(config, agents, profile);
  const double cap = 1.0 - kBoundMargin;

  if (!is_dual_market(config.mechanism)) {
    const double h0 = *config.provision_point;
    profile.scale_for = solve_scale(config, slots, Market::For, 0.0, h0);
  } else {
    const double h1 = *config.target_for;
    const double h2 = *config.target_against;
    // Each market's bounds rise with the other's issuance under PPSN, so
    // alternate until both scales settle.
    double c1 = cap;
    double c2 = cap;
    for (int round = 0; round < 100; ++round) {
      const double n1 = solve_scale(config, slots, Market::For, c2, h1);
      const double n2 = solve_scale(config, slots, Market::Against, n1, h2);
      const bool settled =
          std::abs(n1 - c1) < 1e-15 && std::abs(n2 - c2) < 1e-15;
      c1 = n1;
      c2 = n2;
      if (settled || config.mechanism == Mechanism::PPRN) break;
    }
    profile.scale_for = c1;
    profile.scale_against = c2;
  }

  profile.entries =
      scaled_entries(config, slots, profile.scale_for, profile.scale_against);
  close_residual(profile.entries, Market::For, config.target(Market::For));
  if (is_dual_market(config.mechanism)) {
    close_residual(profile.entries, Market::Against,
                   config.target(Market::Against));
  }
  return profile;
}

Profile forced_profile(const CampaignConfig& config,
                       const std::vector<AgentProfile>& agents) {
  validate(config);
  validate_population(agents, config);
  Profile profile;
  attach_beliefs(config, agents, {}, profile);
  const std::vector<Slot> slots = make_slots(config, agents, profile);
  profile.entries = scaled_entries(config, slots, 0.0, 0.0);

  std::vector<Market> markets{Market::For};
  if (is_dual_market(config.mechanism)) markets.push_back(Market::Against);
  for (Market m : markets) {
    double weight = 0.0;
    for (const Slot& s : slots) {
      if (s.market == m) weight += std::abs(s.agent->valuation) + s.reward;
    }
    if (weight <= 0.0) {
      fail(ErrorKind::Infeasible, std::string("profile: no agent values market '") +
                                      to_string(m) + "'");
    }
    const double target = config.target(m);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].market != m) continue;
      profile.entries[i].amount =
          target * (std::abs(slots[i].agent->valuation) + slots[i].reward) /
          weight;
    }
    close_residual(profile.entries, m, target);
  }
  return profile;
}

Profile profile_from_actions(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const std::vector<Action>& actions,
                             const std::vector<BeliefReport>& reports) {
  validate(config);
  validate_population(agents, config);
  Profile profile;
  attach_beliefs(config, agents, reports, profile);

  std::map<AgentId, const Action*> by_agent;
  for (const auto& a : actions) {
    find_agent(agents, a.agent);
    require(by_agent.emplace(a.agent, &a).second,
            "profile: agent " + std::to_string(a.agent) +
                " has more than one action");
  }

  const Market leader = leading_market(agents);
  for (const auto& agent : agents) {
    ProfileEntry e;
    e.agent = agent.id;
    if (auto it = by_agent.find(agent.id); it != by_agent.end()) {
      e.amount = it->second->amount;
      e.tick = it->second->tick;
      e.market = it->second->market;
    } else {
      e.market = is_dual_market(config.mechanism) ? derive_preference(agent)
                                                  : Market::For;
      e.tick = equilibrium_tick(config, agent, e.market, leader);
    }
    profile.entries.push_back(e);
  }
  sort_entries(profile.entries);

  const CostFunction cf = config.cost_function();
  double raised_for = 0.0;
  double raised_against = 0.0;
  for (auto& e : profile.entries) {
    const AgentProfile& agent = find_agent(agents, e.agent);
    const double priced =
        price_point(config, cf, e.market, raised_for, raised_against);
    const auto rw = profile.rewards.find(e.agent);
    const double reward = rw != profile.rewards.end() ? rw->second : 0.0;
    e.bound = equilibrium_bound(config, agent, priced, reward);
    e.limit = e.bound;
    (e.market == Market::For ? raised_for : raised_against) += e.amount;
  }
  return profile;
}

std::vector<Action> profile_actions(const Profile& profile) {
  std::vector<Action> actions;
  for (const auto& e : profile.entries) {
    if (e.amount > 0.0) actions.push_back({e.agent, e.amount, e.market, e.tick});
  }
  std::sort(actions.begin(), actions.end(), action_order);
  return actions;
}

double profile_total(const Profile& profile, Market market) {
  return market_total(profile.entries, market);
}

}  // namespace civic
