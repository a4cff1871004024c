#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "civic/equilibrium.hpp"
#include "civic/error.hpp"

namespace civic {

namespace {

constexpr double kReachSlack = 1e-12;

struct MarketPair {
  double for_ = 0.0;
  double against = 0.0;

  double& at(Market m) { return m == Market::For ? for_ : against; }
  double at(Market m) const { return m == Market::For ? for_ : against; }
};

Market opposite(Market m) {
  return m == Market::For ? Market::Against : Market::For;
}

class Oracle {
 public:
  Oracle(const CampaignConfig& config, const Profile& profile)
      : config_(config), profile_(profile),
        cf_(config.cost_function()) {
    for (const auto& r : profile.reports) sides_[r.agent] = side_of(r);
  }

  double reward(AgentId id) const {
    auto it = profile_.rewards.find(id);
    return it != profile_.rewards.end() ? it->second : 0.0;
  }

  BeliefSide side(const AgentProfile& agent) const {
    auto it = sides_.find(agent.id);
    return it != sides_.end() ? it->second : agent.belief_side;
  }

  bool reached(Market m, double total) const {
    const double target = config_.target(m);
    return total >= target * (1.0 - kReachSlack);
  }

  // Belief-weighted utility in the branch the agent's own market realizes.
  // `before` prices the allocation; `total` decides the branch.
  double payoff(const AgentProfile& agent, double x, Market market,
                const MarketPair& before, const MarketPair& total) const {
    const Mechanism mech = config_.mechanism;
    ContributionRecord rec;
    rec.agent = agent.id;
    rec.amount = x;
    rec.market = market;
    if (is_securities_based(mech)) {
      rec.priced_at =
          mech == Mechanism::PPSN
              ? std::min(issued_after(cf_, before.for_),
                         issued_after(cf_, before.against))
              : issued_after(cf_, before.at(market));
      rec.securities = securities_for(cf_, x, rec.priced_at);
    }

    const bool success = reached(market, total.at(market));
    Verdict verdict = Verdict::Expired;
    if (success) {
      verdict = market == Market::For ? Verdict::Provisioned
                                      : Verdict::Rejected;
    } else if (is_dual_market(mech) &&
               reached(opposite(market), total.at(opposite(market)))) {
      verdict = market == Market::For ? Verdict::Rejected
                                      : Verdict::Provisioned;
    }
    const bool provisioned = verdict == Verdict::Provisioned;
    const double b = reward(agent.id);

    double u = 0.0;
    switch (mech) {
      case Mechanism::PPR:
        u = ppr_payout(agent.valuation, x, total.for_, *config_.refund_budget,
                       provisioned).utility;
        break;
      case Mechanism::PPS:
        u = pps_payout(agent.valuation, rec, provisioned).utility;
        break;
      case Mechanism::PPRN:
        u = pprn_payout(agent.valuation, market, x, total.for_, total.against,
                        *config_.refund_budget, verdict).utility;
        break;
      case Mechanism::PPSN:
        u = ppsn_payout(agent.valuation, rec, verdict).utility;
        break;
      case Mechanism::PPRx:
        u = pprx_payout(side(agent), agent.valuation, x, total.for_,
                        *config_.contribution_budget, b, provisioned).utility;
        break;
      case Mechanism::PPSx:
        u = ppsx_payout(side(agent), agent.valuation, rec, b, provisioned)
                .utility;
        break;
    }
    AgentProfile believer = agent;
    believer.belief_side = side(agent);
    const double p = is_two_phase(mech) ? believer.provision_belief() : 0.5;
    return (success ? p : 1.0 - p) * u;
  }

  // Totals raised by everyone except `agent` before slot (tick, agent), and
  // overall.
  void others(AgentId agent, Tick tick, MarketPair& before,
              MarketPair& total) const {
    before = {};
    total = {};
    for (const auto& e : profile_.entries) {
      if (e.agent == agent) continue;
      total.at(e.market) += e.amount;
      if (std::tie(e.tick, e.agent) < std::tie(tick, agent)) {
        before.at(e.market) += e.amount;
      }
    }
  }

  double action_payoff(const AgentProfile& agent, double x, Tick tick,
                       Market market) const {
    MarketPair before;
    MarketPair total;
    others(agent.id, tick, before, total);
    total.at(market) += x;
    return payoff(agent, x, market, before, total);
  }

  const CampaignConfig& config() const { return config_; }

 private:
  const CampaignConfig& config_;
  const Profile& profile_;
  CostFunction cf_;
  std::map<AgentId, BeliefSide> sides_;
};

std::vector<Market> markets_of(Mechanism m) {
  if (is_dual_market(m)) return {Market::For, Market::Against};
  return {Market::For};
}

void fill_header(EquilibriumReport& report, const char* kind,
                 const CampaignConfig& config,
                 const std::vector<AgentProfile>& agents,
                 const Profile& profile, const CertifyOptions& options) {
  const double target = reference_target(config);
  report.kind = kind;
  report.grid_step = options.grid_step.value_or(target / 1000.0);
  report.epsilon = options.epsilon.value_or(1e-6 * target);
  require(report.grid_step > 0.0, "certify: grid_step must be > 0");
  require(report.epsilon >= 0.0, "certify: epsilon must be >= 0");
  report.profile = profile;
  report.conditions = check_conditions(config, agents);
  for (const auto& e : profile.entries) report.bounds[e.agent] = e.bound;
}

}  // namespace

double reference_target(const CampaignConfig& config) {
  if (is_dual_market(config.mechanism)) {
    return std::min(*config.target_for, *config.target_against);
  }
  return *config.provision_point;
}

double deviation_payoff(const CampaignConfig& config,
                        const std::vector<AgentProfile>& agents,
                        const Profile& profile, AgentId agent, double amount,
                        Tick tick, Market market) {
  Oracle oracle(config, profile);
  return oracle.action_payoff(find_agent(agents, agent), amount, tick, market);
}

EquilibriumReport certify_ne(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const Profile& profile,
                             const CertifyOptions& options) {
  validate(config);
  validate_population(agents, config);
  EquilibriumReport report;
  fill_header(report, "NE", config, agents, profile, options);
  const Oracle oracle(config, profile);
  const Mechanism mech = config.mechanism;
  const double g = report.grid_step;
  const Tick first_tick =
      is_two_phase(mech) ? *config.deadline_belief + 1 : 0;

  for (const auto& e : profile.entries) {
    if (report.evaluations > options.evaluation_cap) {
      report.partial = true;
      break;
    }
    const AgentProfile& agent = find_agent(agents, e.agent);
    const double base = oracle.action_payoff(agent, e.amount, e.tick, e.market);
    const double reach = std::abs(agent.valuation) + oracle.reward(agent.id);
    const auto steps = static_cast<long>(std::floor(reach / g + 1e-9));
    const Tick lo = is_securities_based(mech)
                        ? std::max(first_tick, agent.arrival_contribution)
                        : first_tick;

    std::optional<Deviation> best;
    for (Tick t = lo; t <= config.deadline_contribution; ++t) {
      MarketPair before;
      MarketPair others_total;
      oracle.others(agent.id, t, before, others_total);
      for (Market m : markets_of(mech)) {
        for (long k = 0; k <= steps; ++k) {
          const double x = static_cast<double>(k) * g;
          MarketPair total = others_total;
          total.at(m) += x;
          const double gain =
              oracle.payoff(agent, x, m, before, total) - base;
          ++report.evaluations;
          if (gain > report.epsilon) {
            ++report.profitable_count;
            if (!best || gain > best->gain) {
              best = Deviation{agent.id, x, t, m, gain, std::nullopt};
            }
          }
        }
      }
    }
    if (best) report.deviations.push_back(*best);
    ++report.explored_agents;
  }
  report.certified = !report.partial && report.deviations.empty();
  return report;
}

EquilibriumReport certify_spe(const CampaignConfig& config,
                              const std::vector<AgentProfile>& agents,
                              const Profile& profile,
                              const CertifyOptions& options) {
  validate(config);
  validate_population(agents, config);
  const Mechanism mech = config.mechanism;
  if (!is_securities_based(mech)) {
    fail(ErrorKind::Unsupported,
         std::string("certify_spe: ") + to_string(mech) +
             " is not a sequential mechanism (use PPS, PPSN or PPSx)");
  }
  require(options.spe_grid_points >= 2, "certify_spe: need >= 2 grid points");
  EquilibriumReport report;
  fill_header(report, "SPE", config, agents, profile, options);
  const Oracle oracle(config, profile);
  const int points = options.spe_grid_points;
  const auto& entries = profile.entries;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (report.evaluations > options.evaluation_cap) {
      report.partial = true;
      break;
    }
    const ProfileEntry& e = entries[i];
    const AgentProfile& agent = find_agent(agents, e.agent);
    const Market own = e.market;
    MarketPair path;       // raised before this agent on the equilibrium path
    MarketPair followers;  // raised after it, held fixed
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (j < i) path.at(entries[j].market) += entries[j].amount;
      if (j > i) followers.at(entries[j].market) += entries[j].amount;
    }

    const double reach = std::abs(agent.valuation) + oracle.reward(agent.id);
    std::vector<double> amounts;
    for (int k = 0; k < points; ++k) {
      amounts.push_back(reach * k / (points - 1));
    }
    const double target = config.target(own);
    std::vector<double> states{path.at(own)};
    for (int k = 0; k < points; ++k) states.push_back(target * k / (points - 1));

    for (std::size_t s = 0; s < states.size(); ++s) {
      MarketPair before = path;
      before.at(own) = states[s];

      // Crossing contributions are truncated by the engine, and a met
      // target ignores further money.
      auto value = [&](double x, Market m) {
        const double room = std::max(config.target(m) - before.at(m), 0.0);
        const double paid = std::min(x, room);
        MarketPair total{before.for_ + followers.for_,
                         before.against + followers.against};
        total.at(m) += paid;
        ++report.evaluations;
        return oracle.payoff(agent, paid, m, before, total);
      };

      const double remaining = target - before.at(own);
      const double need = remaining - followers.at(own);
      double prescribed = 0.0;
      if (remaining > 0.0 && need > 0.0) {
        // Largest grid amount that still leaves the target unmet.
        const double short_of = before.at(own) + followers.at(own);
        double harvest = 0.0;
        for (double x : amounts) {
          if (!oracle.reached(own, short_of + x)) harvest = std::max(harvest, x);
        }
        prescribed = value(need, own) >= value(harvest, own) ? need : harvest;
      }
      const double u_star = value(prescribed, own);

      double best_u = u_star;
      Deviation best{agent.id, prescribed, e.tick, own, 0.0, states[s]};
      for (Market m : markets_of(mech)) {
        for (double x : amounts) {
          const double u = value(x, m);
          if (u > best_u) {
            best_u = u;
            best.amount = x;
            best.market = m;
          }
        }
      }

      // Off-path states check the threshold strategy; the on-path state
      // checks the profile's own action as well.
      double gain = best_u - u_star;
      if (s == 0) gain = std::max(gain, best_u - value(e.amount, own));
      if (gain > report.epsilon) {
        best.gain = gain;
        ++report.profitable_count;
        report.deviations.push_back(best);
      }
    }
    ++report.explored_agents;
  }
  report.certified = !report.partial && report.deviations.empty();
  return report;
}

double preference_flip_delta(const CampaignConfig& config,
                             const std::vector<AgentProfile>& agents,
                             const Profile& profile, AgentId agent_id) {
  if (config.mechanism != Mechanism::PPSN) {
    fail(ErrorKind::Unsupported, "preference_flip_delta: PPSN only");
  }
  const AgentProfile& agent = find_agent(agents, agent_id);
  const CostFunction cf = config.cost_function();
  const ProfileEntry* self = nullptr;
  MarketPair before;
  for (const auto& e : profile.entries) {
    if (e.agent == agent_id) {
      self = &e;
      break;
    }
    before.at(e.market) += e.amount;
  }
  require(self != nullptr, "preference_flip_delta: agent not in profile");

  ContributionRecord rec;
  rec.agent = agent_id;
  rec.amount = self->amount;
  rec.priced_at = std::min(issued_after(cf, before.for_),
                           issued_after(cf, before.against));
  rec.securities = securities_for(cf, rec.amount, rec.priced_at);

  auto expected = [&](Market m) {
    rec.market = m;
    return 0.5 * ppsn_payout(agent.valuation, rec, Verdict::Provisioned).utility +
           0.5 * ppsn_payout(agent.valuation, rec, Verdict::Rejected).utility;
  };
  return expected(opposite(self->market)) - expected(self->market);
}

}  // namespace civic
