#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "civic/belief.hpp"
#include "civic/mechanisms.hpp"
#include "civic/model.hpp"

namespace civic {

inline constexpr int kScenarioVersion = 1;

struct AnalysisFlags {
  bool run_campaign = true;
  bool certify_ne = false;
  bool certify_spe = false;
  bool conditions_only = false;
};

struct Scenario {
  std::string name;
  CampaignConfig config;
  std::vector<AgentProfile> agents;
  // Explicit play overrides the constructed equilibrium profile.
  std::optional<std::vector<Action>> actions;
  std::optional<std::vector<BeliefReport>> reports;
  AnalysisFlags analysis;
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
  std::optional<double> epsilon;
};

// Parses and fully validates a scenario document. `origin` prefixes error
// messages.
Scenario parse_scenario(const std::string& text,
                        const std::string& origin = "scenario");
Scenario load_scenario(const std::string& path);

void validate(const Scenario& scenario);

// Canonical JSON text; parse_scenario(dump_scenario(s)) reproduces s.
std::string dump_scenario(const Scenario& scenario);

}  // namespace civic
