#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "civic/model.hpp"
#include "civic/scenario.hpp"

namespace civic {

// Uniform doubles in [0, 1) from the top 53 bits of mt19937_64, so a seed
// yields the same stream on every platform (std::uniform_real_distribution
// is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Integer in [lo, hi].
  long integer(long lo, long hi);
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct ScenarioTemplate {
  std::string name;
  Mechanism mechanism = Mechanism::PPR;
  int min_agents = 3;
  int max_agents = 10;
  double min_valuation = 1.0;
  double max_valuation = 20.0;
  // Share of agents opposing the project (dual-market mechanisms).
  double negative_share = 0.4;
  double max_epsilon = 0.0;
  Tick deadline_contribution = 10;
  Tick deadline_belief = 3;
  CostFunction cost;
  // Targets are drawn as this fraction of the largest feasible target.
  double min_margin = 0.5;
  double max_margin = 0.9;
  // Fixed targets skip the search and must be feasible as given.
  std::optional<double> provision_point;
  std::optional<double> target_for;
  std::optional<double> target_against;
  // Valuations scaled so the supporting side totals at most this much.
  std::optional<double> max_total_for;
};

// Built-in templates: ppr, pps, pprn, ppsn, pprx, ppsx.
ScenarioTemplate builtin_template(const std::string& name);
std::vector<std::string> builtin_template_names();

// Seeded scenario whose existence conditions hold and whose equilibrium
// profile can be built. Throws Infeasible when the template cannot be met.
Scenario generate_scenario(const ScenarioTemplate& tmpl, std::uint64_t seed);

// `count` scenarios using seeds seed, seed+1, ...
std::vector<Scenario> generate_batch(const ScenarioTemplate& tmpl,
                                     std::uint64_t seed, int count);

}  // namespace civic
