#pragma once

#include <optional>
#include <string>
#include <vector>

#include "civic/belief.hpp"
#include "civic/equilibrium.hpp"
#include "civic/scenario.hpp"

namespace civic {

struct RunOptions {
  std::optional<double> grid_step;  // overrides the scenario
  std::optional<double> epsilon;
  bool force_certify = false;  // certify even if the scenario does not ask
};

struct RunResult {
  std::vector<ConditionCheck> conditions;
  std::optional<Profile> profile;
  // "explicit", "equilibrium" or "forced" (bounds could not cover a target).
  std::string profile_source;
  std::optional<std::string> profile_error;
  std::optional<CampaignRun> campaign;
  std::optional<Outcome> outcome;
  std::optional<BeliefLedger> beliefs;
  std::optional<EquilibriumReport> ne;
  std::optional<EquilibriumReport> spe;

  // All requested certifications passed.
  bool certified() const;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

enum class TableFormat { Csv, Json };
TableFormat parse_table_format(const std::string& text);

std::string settlement_table(const Scenario& scenario, const RunResult& result,
                             TableFormat format);
std::string ledger_table(const Scenario& scenario, const RunResult& result,
                         TableFormat format);
std::string report_json(const Scenario& scenario, const RunResult& result);
std::string summary_text(const Scenario& scenario, const RunResult& result);
std::string conditions_text(const std::vector<ConditionCheck>& checks);

// Writes settlement, ledger, report.json and summary.txt into `dir`.
void write_reports(const Scenario& scenario, const RunResult& result,
                   const std::string& dir, TableFormat format);

// Combined PPSN + BBR gap table over epsilon in {0, 0.05, ..., 0.5} and the
// given R values.
struct GapRow {
  double epsilon = 0.0;
  double securities = 0.0;
  double gap = 0.0;
};
std::vector<GapRow> combined_gap_table(const std::vector<double>& securities);
std::string gap_table_text(const std::vector<GapRow>& rows, TableFormat format);

// Fixed-width number formatting shared by every report.
std::string format_number(double value);

}  // namespace civic
