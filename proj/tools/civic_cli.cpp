// civic: run, check and certify civic crowdfunding scenarios.
//
// Exit status: 0 success, 1 conditions violated or certification failed,
// 2 usage error, 3 invalid input, 4 parse error, 5 infeasible,
// 6 unsupported, 7 I/O error. Failures print one line to stderr:
//   error: <kind>: <message>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "civic/error.hpp"
#include "civic/generate.hpp"
#include "civic/runner.hpp"
#include "civic/scenario.hpp"

namespace {

int exit_code(civic::ErrorKind kind) {
  switch (kind) {
    case civic::ErrorKind::InvalidInput: return 3;
    case civic::ErrorKind::Parse: return 4;
    case civic::ErrorKind::Infeasible: return 5;
    case civic::ErrorKind::Unsupported: return 6;
    case civic::ErrorKind::Io: return 7;
  }
  return 3;
}

struct Flags {
  std::string scenario;
  std::string out;
  std::optional<double> grid_step;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string template_name;
  int count = 1;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--grid-step", f.grid_step, "Deviation grid step");
  cmd->add_option("--epsilon", f.epsilon, "Profitable-deviation tolerance");
  cmd->add_option("--format", f.format, "Settlement/ledger format")
      ->check(CLI::IsMember({"csv", "json"}));
}

civic::RunOptions run_options(const Flags& f) {
  civic::RunOptions o;
  o.grid_step = f.grid_step;
  o.epsilon = f.epsilon;
  return o;
}

int cmd_check(const Flags& f) {
  civic::Scenario s = civic::load_scenario(f.scenario);
  const auto checks = civic::check_conditions(s.config, s.agents);
  std::cout << civic::conditions_text(checks);
  return civic::all_satisfied(checks) ? 0 : 1;
}

int cmd_run(const Flags& f, bool certify) {
  civic::Scenario s = civic::load_scenario(f.scenario);
  if (f.seed) s.seed = *f.seed;
  civic::RunOptions o = run_options(f);
  o.force_certify = certify;
  const civic::RunResult result = civic::run_scenario(s, o);
  if (!f.out.empty()) {
    civic::write_reports(s, result, f.out,
                         civic::parse_table_format(f.format));
  }
  std::cout << civic::summary_text(s, result);
  if (certify) return result.certified() ? 0 : 1;
  if (result.ne || result.spe) return result.certified() ? 0 : 1;
  return 0;
}

int cmd_gen(const Flags& f) {
  const civic::ScenarioTemplate t = civic::builtin_template(f.template_name);
  const auto batch = civic::generate_batch(t, f.seed.value_or(0), f.count);
  if (f.out.empty()) {
    for (const auto& s : batch) std::cout << civic::dump_scenario(s);
    return 0;
  }
  std::error_code ec;
  std::filesystem::create_directories(f.out, ec);
  if (ec) {
    civic::fail(civic::ErrorKind::Io,
                "cannot create '" + f.out + "': " + ec.message());
  }
  for (const auto& s : batch) {
    const auto path = std::filesystem::path(f.out) / (s.name + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      civic::fail(civic::ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    out << civic::dump_scenario(s);
    std::cout << path.string() << '\n';
  }
  return 0;
}

int cmd_demo(const Flags& f) {
  const auto rows = civic::combined_gap_table({0.0, 1.0, 5.0});
  std::cout << civic::gap_table_text(rows, civic::parse_table_format(f.format));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Civic crowdfunding mechanism simulator"};
  app.require_subcommand(1);
  Flags f;

  auto* check = app.add_subcommand("check", "Evaluate existence conditions");
  check->add_option("--scenario", f.scenario, "Scenario JSON")->required();

  auto* run = app.add_subcommand("run", "Run the campaign and requested analyses");
  run->add_option("--scenario", f.scenario, "Scenario JSON")->required();
  run->add_option("--out", f.out, "Report directory");
  run->add_option("--seed", f.seed, "Override the scenario seed");
  add_common(run, f);

  auto* certify = app.add_subcommand("certify", "Certify the equilibrium profile");
  certify->add_option("--scenario", f.scenario, "Scenario JSON")->required();
  certify->add_option("--out", f.out, "Report directory");
  certify->add_option("--seed", f.seed, "Override the scenario seed");
  add_common(certify, f);

  auto* gen = app.add_subcommand("gen", "Generate seeded scenarios");
  gen->add_option("--template", f.template_name,
                  "Template: ppr|pps|pprn|ppsn|pprx|ppsx")
      ->required();
  gen->add_option("--seed", f.seed, "First seed");
  gen->add_option("--count", f.count, "Number of scenarios")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", f.out, "Output directory (stdout if omitted)");

  auto* demo = app.add_subcommand("demo", "Combined-mechanism incentive gap table");
  demo->add_option("--format", f.format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*check) return cmd_check(f);
    if (*run) return cmd_run(f, false);
    if (*certify) return cmd_run(f, true);
    if (*gen) return cmd_gen(f);
    if (*demo) return cmd_demo(f);
  } catch (const civic::Error& e) {
    std::cerr << "error: " << civic::to_string(e.kind()) << ": " << e.what()
              << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
