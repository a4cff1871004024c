#include "civic/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "civic/error.hpp"

namespace civic {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) fail(ErrorKind::Parse, where + ": unknown field '" + key + "'");
  }
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) {
    fail(ErrorKind::Parse, where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(ErrorKind::Parse, field + ": expected a number");
  return v.get<double>();
}

long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) {
    fail(ErrorKind::Parse, field + ": expected an integer");
  }
  return v.get<long>();
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) fail(ErrorKind::Parse, field + ": expected a string");
  return v.get<std::string>();
}

bool flag(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(ErrorKind::Parse, field + ": expected true/false");
  return v.get<bool>();
}

std::optional<double> optional_number(const json& obj, const char* key,
                                      const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  return number(obj.at(key), where + "." + key);
}

AgentProfile parse_agent(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Parse, where + ": expected an object");
  reject_unknown(j,
                 {"id", "valuation", "belief_epsilon", "belief_side",
                  "arrival_belief", "arrival_contribution"},
                 where);
  AgentProfile a;
  a.id = static_cast<AgentId>(integer(member(j, "id", where), where + ".id"));
  a.valuation = number(member(j, "valuation", where), where + ".valuation");
  if (j.contains("belief_epsilon")) {
    a.belief_epsilon = number(j.at("belief_epsilon"), where + ".belief_epsilon");
  }
  if (j.contains("belief_side")) {
    a.belief_side = parse_belief_side(text(j.at("belief_side"),
                                           where + ".belief_side"));
  }
  if (j.contains("arrival_belief")) {
    a.arrival_belief = static_cast<Tick>(
        integer(j.at("arrival_belief"), where + ".arrival_belief"));
  }
  if (j.contains("arrival_contribution")) {
    a.arrival_contribution = static_cast<Tick>(
        integer(j.at("arrival_contribution"), where + ".arrival_contribution"));
  }
  return a;
}

Action parse_action(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Parse, where + ": expected an object");
  reject_unknown(j, {"agent", "amount", "market", "tick"}, where);
  Action a;
  a.agent = static_cast<AgentId>(integer(member(j, "agent", where),
                                         where + ".agent"));
  a.amount = number(member(j, "amount", where), where + ".amount");
  a.tick = static_cast<Tick>(integer(member(j, "tick", where), where + ".tick"));
  if (j.contains("market")) {
    a.market = parse_market(text(j.at("market"), where + ".market"));
  }
  return a;
}

BeliefReport parse_report(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Parse, where + ": expected an object");
  reject_unknown(j, {"agent", "information", "prediction", "tick"}, where);
  BeliefReport r;
  r.agent = static_cast<AgentId>(integer(member(j, "agent", where),
                                         where + ".agent"));
  r.information = static_cast<int>(
      integer(member(j, "information", where), where + ".information"));
  r.prediction = number(member(j, "prediction", where), where + ".prediction");
  r.tick = static_cast<Tick>(integer(member(j, "tick", where), where + ".tick"));
  return r;
}

}  // namespace

void validate(const Scenario& s) {
  validate(s.config);
  validate_population(s.agents, s.config);
  std::set<AgentId> ids;
  for (const auto& a : s.agents) ids.insert(a.id);
  if (s.actions) {
    for (std::size_t i = 0; i < s.actions->size(); ++i) {
      const Action& a = (*s.actions)[i];
      require(ids.count(a.agent) == 1,
              "actions[" + std::to_string(i) + "].agent: undeclared agent " +
                  std::to_string(a.agent));
    }
  }
  if (s.reports) {
    require(is_two_phase(s.config.mechanism),
            std::string("reports: not used by ") +
                to_string(s.config.mechanism) + ", must be absent");
    std::set<AgentId> seen;
    for (std::size_t i = 0; i < s.reports->size(); ++i) {
      const BeliefReport& r = (*s.reports)[i];
      const std::string where = "reports[" + std::to_string(i) + "]";
      require(ids.count(r.agent) == 1,
              where + ".agent: undeclared agent " + std::to_string(r.agent));
      require(seen.insert(r.agent).second,
              where + ".agent: agent " + std::to_string(r.agent) +
                  " reports twice");
      require(r.information == 0 || r.information == 1,
              where + ".information: must be 0 or 1");
      require(r.prediction >= 0.0 && r.prediction <= 1.0,
              where + ".prediction: must lie in [0, 1]");
      require(r.tick >= 0 && r.tick <= *s.config.deadline_belief,
              where + ".tick: must lie in [0, deadline_belief]");
    }
    require(s.reports->size() >= 3, "reports: RBTS requires n >= 3");
  }
  if (s.grid_step) require(*s.grid_step > 0.0, "grid_step: must be > 0");
  if (s.epsilon) require(*s.epsilon >= 0.0, "epsilon: must be >= 0");
}

Scenario parse_scenario(const std::string& source, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, origin + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Parse, origin + ": expected an object");

  try {
    reject_unknown(doc,
                   {"version", "name", "mechanism", "provision_point",
                    "provision_points", "refund_budget", "belief_budget",
                    "contribution_budget", "deadline_contribution",
                    "deadline_belief", "cost", "agents", "actions", "reports",
                    "analysis", "seed", "grid_step", "epsilon"},
                   origin);
    const long version = integer(member(doc, "version", origin), "version");
    if (version != kScenarioVersion) {
      fail(ErrorKind::Parse, "version: unsupported scenario version " +
                                 std::to_string(version));
    }

    Scenario s;
    if (doc.contains("name")) s.name = text(doc.at("name"), "name");
    CampaignConfig& c = s.config;
    c.mechanism = parse_mechanism(text(member(doc, "mechanism", origin),
                                       "mechanism"));
    c.provision_point = optional_number(doc, "provision_point", "scenario");
    if (doc.contains("provision_points")) {
      const json& pp = doc.at("provision_points");
      if (!pp.is_object()) {
        fail(ErrorKind::Parse, "provision_points: expected an object");
      }
      reject_unknown(pp, {"for", "against"}, "provision_points");
      c.target_for = number(member(pp, "for", "provision_points"),
                            "provision_points.for");
      c.target_against = number(member(pp, "against", "provision_points"),
                                "provision_points.against");
    }
    c.refund_budget = optional_number(doc, "refund_budget", "scenario");
    c.belief_budget = optional_number(doc, "belief_budget", "scenario");
    c.contribution_budget =
        optional_number(doc, "contribution_budget", "scenario");
    c.deadline_contribution = static_cast<Tick>(integer(
        member(doc, "deadline_contribution", origin), "deadline_contribution"));
    if (doc.contains("deadline_belief")) {
      c.deadline_belief = static_cast<Tick>(
          integer(doc.at("deadline_belief"), "deadline_belief"));
    }
    if (doc.contains("cost")) {
      const json& cj = doc.at("cost");
      if (!cj.is_object()) fail(ErrorKind::Parse, "cost: expected an object");
      reject_unknown(cj, {"liquidity", "fixed_leg"}, "cost");
      CostFunction cf;
      if (cj.contains("liquidity")) {
        cf.liquidity = number(cj.at("liquidity"), "cost.liquidity");
      }
      if (cj.contains("fixed_leg")) {
        cf.fixed_leg = number(cj.at("fixed_leg"), "cost.fixed_leg");
      }
      c.cost_params = cf;
    }

    const json& agents = member(doc, "agents", origin);
    if (!agents.is_array()) fail(ErrorKind::Parse, "agents: expected an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      s.agents.push_back(
          parse_agent(agents[i], "agents[" + std::to_string(i) + "]"));
    }
    if (doc.contains("actions")) {
      const json& acts = doc.at("actions");
      if (!acts.is_array()) fail(ErrorKind::Parse, "actions: expected an array");
      s.actions.emplace();
      for (std::size_t i = 0; i < acts.size(); ++i) {
        s.actions->push_back(
            parse_action(acts[i], "actions[" + std::to_string(i) + "]"));
      }
    }
    if (doc.contains("reports")) {
      const json& reps = doc.at("reports");
      if (!reps.is_array()) fail(ErrorKind::Parse, "reports: expected an array");
      s.reports.emplace();
      for (std::size_t i = 0; i < reps.size(); ++i) {
        s.reports->push_back(
            parse_report(reps[i], "reports[" + std::to_string(i) + "]"));
      }
    }
    if (doc.contains("analysis")) {
      const json& an = doc.at("analysis");
      if (!an.is_object()) fail(ErrorKind::Parse, "analysis: expected an object");
      reject_unknown(an,
                     {"run_campaign", "certify_ne", "certify_spe",
                      "conditions_only"},
                     "analysis");
      AnalysisFlags& f = s.analysis;
      if (an.contains("run_campaign")) {
        f.run_campaign = flag(an.at("run_campaign"), "analysis.run_campaign");
      }
      if (an.contains("certify_ne")) {
        f.certify_ne = flag(an.at("certify_ne"), "analysis.certify_ne");
      }
      if (an.contains("certify_spe")) {
        f.certify_spe = flag(an.at("certify_spe"), "analysis.certify_spe");
      }
      if (an.contains("conditions_only")) {
        f.conditions_only =
            flag(an.at("conditions_only"), "analysis.conditions_only");
      }
    }
    if (doc.contains("seed")) {
      const json& sd = doc.at("seed");
      if (!sd.is_number_unsigned()) {
        fail(ErrorKind::Parse, "seed: expected a non-negative integer");
      }
      s.seed = sd.get<std::uint64_t>();
    }
    s.grid_step = optional_number(doc, "grid_step", "scenario");
    s.epsilon = optional_number(doc, "epsilon", "scenario");

    validate(s);
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string dump_scenario(const Scenario& s) {
  const CampaignConfig& c = s.config;
  json doc;
  doc["version"] = kScenarioVersion;
  if (!s.name.empty()) doc["name"] = s.name;
  doc["mechanism"] = to_string(c.mechanism);
  if (c.provision_point) doc["provision_point"] = *c.provision_point;
  if (c.target_for && c.target_against) {
    doc["provision_points"] = {{"for", *c.target_for},
                               {"against", *c.target_against}};
  }
  if (c.refund_budget) doc["refund_budget"] = *c.refund_budget;
  if (c.belief_budget) doc["belief_budget"] = *c.belief_budget;
  if (c.contribution_budget) doc["contribution_budget"] = *c.contribution_budget;
  doc["deadline_contribution"] = c.deadline_contribution;
  if (c.deadline_belief) doc["deadline_belief"] = *c.deadline_belief;
  if (c.cost_params) {
    doc["cost"] = {{"liquidity", c.cost_params->liquidity},
                   {"fixed_leg", c.cost_params->fixed_leg}};
  }

  json agents = json::array();
  for (const auto& a : s.agents) {
    json j;
    j["id"] = a.id;
    j["valuation"] = a.valuation;
    j["belief_epsilon"] = a.belief_epsilon;
    j["belief_side"] = to_string(a.belief_side);
    j["arrival_belief"] = a.arrival_belief;
    j["arrival_contribution"] = a.arrival_contribution;
    agents.push_back(std::move(j));
  }
  doc["agents"] = std::move(agents);

  if (s.actions) {
    json acts = json::array();
    for (const auto& a : *s.actions) {
      acts.push_back({{"agent", a.agent},
                      {"amount", a.amount},
                      {"market", to_string(a.market)},
                      {"tick", a.tick}});
    }
    doc["actions"] = std::move(acts);
  }
  if (s.reports) {
    json reps = json::array();
    for (const auto& r : *s.reports) {
      reps.push_back({{"agent", r.agent},
                      {"information", r.information},
                      {"prediction", r.prediction},
                      {"tick", r.tick}});
    }
    doc["reports"] = std::move(reps);
  }
  doc["analysis"] = {{"run_campaign", s.analysis.run_campaign},
                     {"certify_ne", s.analysis.certify_ne},
                     {"certify_spe", s.analysis.certify_spe},
                     {"conditions_only", s.analysis.conditions_only}};
  if (s.seed) doc["seed"] = *s.seed;
  if (s.grid_step) doc["grid_step"] = *s.grid_step;
  if (s.epsilon) doc["epsilon"] = *s.epsilon;
  return doc.dump(2) + "\n";
}

}  // namespace civic
