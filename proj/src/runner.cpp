#include "civic/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "civic/error.hpp"

namespace civic {

namespace {

using json = nlohmann::ordered_json;

json to_json(const ConditionCheck& c) {
  return {{"name", c.name},
          {"satisfied", c.satisfied},
          {"lhs", c.lhs},
          {"rhs", c.rhs}};
}

json to_json(const Profile& p) {
  json entries = json::array();
  for (const auto& e : p.entries) {
    entries.push_back({{"agent", e.agent},
                       {"amount", e.amount},
                       {"tick", e.tick},
                       {"market", to_string(e.market)},
                       {"bound", e.bound},
                       {"limit", e.limit}});
  }
  json out{{"entries", std::move(entries)},
           {"total_for", profile_total(p, Market::For)},
           {"total_against", profile_total(p, Market::Against)}};
  if (!p.reports.empty()) {
    json reports = json::array();
    for (const auto& r : p.reports) {
      reports.push_back({{"agent", r.agent},
                         {"information", r.information},
                         {"prediction", r.prediction},
                         {"tick", r.tick},
                         {"conditional_reward", p.rewards.at(r.agent)}});
    }
    out["belief_reports"] = std::move(reports);
  }
  return out;
}

json to_json(const EquilibriumReport& r) {
  json deviations = json::array();
  for (const auto& d : r.deviations) {
    json j{{"agent", d.agent},
           {"amount", d.amount},
           {"tick", d.tick},
           {"market", to_string(d.market)},
           {"gain", d.gain}};
    if (d.state_total) j["state_total"] = *d.state_total;
    deviations.push_back(std::move(j));
  }
  json bounds = json::array();
  for (const auto& [agent, b] : r.bounds) {
    bounds.push_back({{"agent", agent}, {"bound", b}});
  }
  return {{"kind", r.kind},
          {"certified", r.certified},
          {"partial", r.partial},
          {"grid_step", r.grid_step},
          {"epsilon", r.epsilon},
          {"explored_agents", r.explored_agents},
          {"evaluations", r.evaluations},
          {"profitable_count", r.profitable_count},
          {"bounds", std::move(bounds)},
          {"deviations", std::move(deviations)}};
}

std::string side_label(const Scenario& s, const RunResult& r, AgentId id,
                       const Payout& p) {
  if (!is_two_phase(s.config.mechanism)) return to_string(p.side);
  if (r.beliefs) {
    for (const auto& rep : r.beliefs->reports) {
      if (rep.agent == id) return to_string(side_of(rep));
    }
  }
  return to_string(find_agent(s.agents, id).belief_side);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << body;
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

bool RunResult::certified() const {
  if (!ne && !spe) return false;
  return (!ne || ne->certified) && (!spe || spe->certified);
}

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  validate(scenario);
  const CampaignConfig& config = scenario.config;
  const auto& agents = scenario.agents;
  RunResult result;
  result.conditions = check_conditions(config, agents);
  if (scenario.analysis.conditions_only) return result;

  const bool want_ne = scenario.analysis.certify_ne || options.force_certify;
  const bool want_spe =
      is_securities_based(config.mechanism) &&
      (scenario.analysis.certify_spe || options.force_certify);
  const std::vector<BeliefReport> explicit_reports =
      scenario.reports.value_or(std::vector<BeliefReport>{});

  if (scenario.actions) {
    result.profile_source = "explicit";
    if (want_ne || want_spe) {
      result.profile = profile_from_actions(config, agents, *scenario.actions,
                                            explicit_reports);
    }
  } else {
    try {
      result.profile = construct_profile(config, agents);
      result.profile_source = "equilibrium";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Infeasible) throw;
      result.profile_error = e.what();
      try {
        result.profile = forced_profile(config, agents);
        result.profile_source = "forced";
      } catch (const Error& forced) {
        if (forced.kind() != ErrorKind::Infeasible) throw;
      }
    }
  }

  if (scenario.analysis.run_campaign &&
      (scenario.actions || result.profile)) {
    std::vector<Action> actions;
    if (scenario.actions) {
      actions = *scenario.actions;
      std::stable_sort(actions.begin(), actions.end(), action_order);
    } else {
      actions = profile_actions(*result.profile);
    }
    if (is_two_phase(config.mechanism)) {
      std::vector<BeliefReport> reports = explicit_reports;
      if (reports.empty() && result.profile) reports = result.profile->reports;
      if (reports.empty()) {
        for (const auto& a : agents) reports.push_back(truthful_report(a));
      }
      TwoPhaseResult two = run_two_phase(config, agents, actions, reports);
      result.campaign = std::move(two.campaign);
      result.outcome = std::move(two.outcome);
      result.beliefs = std::move(two.beliefs);
    } else {
      result.campaign = run_campaign(config, actions);
      result.outcome = settle(config, agents, *result.campaign);
    }
  }

  if (result.profile) {
    CertifyOptions copts;
    copts.grid_step = options.grid_step ? options.grid_step : scenario.grid_step;
    copts.epsilon = options.epsilon ? options.epsilon : scenario.epsilon;
    if (want_ne) result.ne = certify_ne(config, agents, *result.profile, copts);
    if (want_spe) {
      result.spe = certify_spe(config, agents, *result.profile, copts);
    }
  }
  return result;
}

TableFormat parse_table_format(const std::string& text) {
  if (text == "csv") return TableFormat::Csv;
  if (text == "json") return TableFormat::Json;
  fail(ErrorKind::InvalidInput, "unknown format '" + text + "' (csv|json)");
}

std::string settlement_table(const Scenario& scenario, const RunResult& result,
                             TableFormat format) {
  json rows = json::array();
  std::ostringstream csv;
  csv << "id,side,x,securities,refund,belief_reward,realized_utility\n";
  if (result.outcome) {
    for (const auto& [id, p] : result.outcome->payouts) {
      const std::string side = side_label(scenario, result, id, p);
      csv << id << ',' << side << ',' << format_number(p.contribution) << ','
          << format_number(p.securities) << ',' << format_number(p.refund)
          << ',' << format_number(p.belief_reward) << ','
          << format_number(p.utility) << '\n';
      rows.push_back({{"id", id},
                      {"side", side},
                      {"x", p.contribution},
                      {"securities", p.securities},
                      {"refund", p.refund},
                      {"belief_reward", p.belief_reward},
                      {"realized_utility", p.utility}});
    }
  }
  return format == TableFormat::Csv ? csv.str() : rows.dump(2) + "\n";
}

std::string ledger_table(const Scenario&, const RunResult& result,
                         TableFormat format) {
  json rows = json::array();
  std::ostringstream csv;
  csv << "tick,agent,market,amount,securities,Q_at_allocation\n";
  if (result.campaign) {
    for (const auto& rec : result.campaign->ledger) {
      csv << rec.tick << ',' << rec.agent << ',' << to_string(rec.market)
          << ',' << format_number(rec.amount) << ','
          << format_number(rec.securities) << ','
          << format_number(rec.priced_at) << '\n';
      rows.push_back({{"tick", rec.tick},
                      {"agent", rec.agent},
                      {"market", to_string(rec.market)},
                      {"amount", rec.amount},
                      {"securities", rec.securities},
                      {"Q_at_allocation", rec.priced_at}});
    }
  }
  return format == TableFormat::Csv ? csv.str() : rows.dump(2) + "\n";
}

std::string report_json(const Scenario& scenario, const RunResult& result) {
  json doc;
  doc["scenario"] = scenario.name;
  doc["mechanism"] = to_string(scenario.config.mechanism);
  json conditions = json::array();
  for (const auto& c : result.conditions) conditions.push_back(to_json(c));
  doc["conditions"] = std::move(conditions);
  doc["conditions_satisfied"] = all_satisfied(result.conditions);

  json profile;
  profile["source"] = result.profile_source;
  if (result.profile_error) profile["error"] = *result.profile_error;
  if (result.profile) profile["strategy"] = to_json(*result.profile);
  doc["profile"] = std::move(profile);

  if (result.campaign) {
    json c{{"verdict", to_string(result.campaign->verdict)},
           {"total_for", result.campaign->markets.market_for.raised},
           {"total_against", result.campaign->markets.market_against.raised}};
    c["halted_at"] = result.campaign->halted_at
                         ? json(*result.campaign->halted_at)
                         : json(nullptr);
    doc["campaign"] = std::move(c);
  }
  if (result.beliefs) {
    const BeliefLedger& b = *result.beliefs;
    json reports = json::array();
    for (const auto& r : b.reports) {
      reports.push_back({{"agent", r.agent},
                         {"information", r.information},
                         {"prediction", r.prediction},
                         {"tick", r.tick},
                         {"score", b.scores.at(r.agent)},
                         {"weight", b.weights.at(r.agent)},
                         {"reward", b.rewards.at(r.agent)}});
    }
    doc["beliefs"] = {{"winning_side", b.winning_side
                                           ? json(to_string(*b.winning_side))
                                           : json(nullptr)},
                      {"reward_undefined", b.reward_undefined},
                      {"reports", std::move(reports)}};
  }
  json cert;
  if (result.ne) cert["ne"] = to_json(*result.ne);
  if (result.spe) cert["spe"] = to_json(*result.spe);
  if (result.ne || result.spe) {
    cert["certified"] = result.certified();
    doc["certification"] = std::move(cert);
  }
  return doc.dump(2) + "\n";
}

std::string conditions_text(const std::vector<ConditionCheck>& checks) {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.satisfied ? "ok        " : "VIOLATED  ") << c.name << "  (lhs "
        << format_number(c.lhs) << ", rhs " << format_number(c.rhs) << ")\n";
  }
  return out.str();
}

std::string summary_text(const Scenario& scenario, const RunResult& result) {
  std::ostringstream out;
  out << "scenario   " << (scenario.name.empty() ? "-" : scenario.name) << '\n'
      << "mechanism  " << to_string(scenario.config.mechanism) << '\n'
      << "agents     " << scenario.agents.size() << "\n\n"
      << "conditions\n"
      << conditions_text(result.conditions);
  if (result.profile_error) {
    out << "\nprofile    infeasible: " << *result.profile_error << '\n';
  }
  if (result.profile) {
    out << "\nprofile (" << result.profile_source << ")\n"
        << "  agent  market   tick        amount         bound\n";
    for (const auto& e : result.profile->entries) {
      char line[128];
      std::snprintf(line, sizeof line, "  %5d  %-7s  %4d  %12s  %12s\n",
                    e.agent, to_string(e.market), e.tick,
                    format_number(e.amount).c_str(),
                    format_number(e.bound).c_str());
      out << line;
    }
  }
  if (result.outcome) {
    out << "\nverdict    " << to_string(result.outcome->verdict)
        << "\nraised     for " << format_number(result.outcome->total_for)
        << ", against " << format_number(result.outcome->total_against)
        << "\n\n  agent  side               x       utility\n";
    for (const auto& [id, p] : result.outcome->payouts) {
      char line[160];
      std::snprintf(line, sizeof line, "  %5d  %-16s  %10s  %12s\n", id,
                    side_label(scenario, result, id, p).c_str(),
                    format_number(p.contribution).c_str(),
                    format_number(p.utility).c_str());
      out << line;
    }
  }
  for (const auto* rep : {result.ne ? &*result.ne : nullptr,
                          result.spe ? &*result.spe : nullptr}) {
    if (!rep) continue;
    out << '\n' << rep->kind << " certification: "
        << (rep->certified ? "certified"
                           : rep->partial ? "partial" : "NOT certified")
        << " (grid " << format_number(rep->grid_step) << ", epsilon "
        << format_number(rep->epsilon) << ", " << rep->evaluations
        << " evaluations)\n";
    for (const auto& d : rep->deviations) {
      out << "  agent " << d.agent << " gains " << format_number(d.gain)
          << " by paying " << format_number(d.amount) << " into "
          << to_string(d.market) << " at tick " << d.tick;
      if (d.state_total) out << " (state " << format_number(*d.state_total) << ")";
      out << '\n';
    }
  }
  return out.str();
}

void write_reports(const Scenario& scenario, const RunResult& result,
                   const std::string& dir, TableFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  const char* ext = format == TableFormat::Csv ? ".csv" : ".json";
  write_file(base / (std::string("settlement") + ext),
             settlement_table(scenario, result, format));
  write_file(base / (std::string("ledger") + ext),
             ledger_table(scenario, result, format));
  write_file(base / "report.json", report_json(scenario, result));
  write_file(base / "summary.txt", summary_text(scenario, result));
}

std::vector<GapRow> combined_gap_table(const std::vector<double>& securities) {
  std::vector<GapRow> rows;
  for (int k = 0; k <= 10; ++k) {
    AgentProfile agent;
    agent.belief_epsilon = 0.05 * k;
    agent.belief_side = BeliefSide::ProvisionLikely;
    for (double R : securities) {
      rows.push_back({agent.belief_epsilon, R, combined_mechanism_gap(agent, R)});
    }
  }
  return rows;
}

std::string gap_table_text(const std::vector<GapRow>& rows, TableFormat format) {
  if (format == TableFormat::Json) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"epsilon", r.epsilon},
                     {"k1", 0.5 + r.epsilon},
                     {"k2", 0.5 - r.epsilon},
                     {"R", r.securities},
                     {"gap", r.gap}});
    }
    return out.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "epsilon,k1,k2,R,gap\n";
  for (const auto& r : rows) {
    out << format_number(r.epsilon) << ',' << format_number(0.5 + r.epsilon)
        << ',' << format_number(0.5 - r.epsilon) << ','
        << format_number(r.securities) << ',' << format_number(r.gap) << '\n';
  }
  return out.str();
}

}  // namespace civic
