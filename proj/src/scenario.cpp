#include "mgdde/scenario.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mgdde/errors.hpp"

namespace mgdde {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
  return j.at(key).get<double>();
}

double optional_number(const json& j, const std::string& key, double fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<LoadSpec> parse_loads(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": must be an array of loads");
  std::vector<LoadSpec> loads;
  int k = 0;
  for (const auto& item : j) {
    const std::string tag = where + "[" + std::to_string(++k) + "]";
    if (!item.is_object()) throw ConfigError(tag + ": must be an object");
    reject_unknown_keys(item, {"resistance", "reactance"}, tag);
    const double r = require_number(item, "resistance", tag);
    const double x = optional_number(item, "reactance", 0.0, tag);
    loads.push_back(LoadSpec{{r, x}});
  }
  return loads;
}

}  // namespace

LoadStepScenario ScenarioConfig::load_step() const {
  LoadStepScenario s;
  s.pre_step_loads = network.loads;
  s.post_step_loads = post_step_loads;
  s.step_time = timing.step_time;
  s.end_time = timing.end_time;
  return s;
}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_config_json(j, path);
}

ScenarioConfig parse_config_json(const json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
  reject_unknown_keys(j,
                      {"nominal_frequency", "inverters", "loads", "load_interpretation",
                       "power_scale", "comm_edges", "consensus_variant", "diffusion_constant",
                       "delay", "spectral_order", "timing", "tolerances"},
                      origin);

  ScenarioConfig cfg;
  cfg.network.omega_nominal = require_number(j, "nominal_frequency", origin);

  if (!j.contains("inverters")) throw ConfigError(origin + ": missing key 'inverters'");
  if (!j.at("inverters").is_array() || j.at("inverters").empty()) {
    throw ConfigError(origin + ": 'inverters' must be a non-empty array");
  }
  int idx = 0;
  for (const auto& item : j.at("inverters")) {
    const std::string tag = origin + ": inverters[" + std::to_string(++idx) + "]";
    if (!item.is_object()) throw ConfigError(tag + ": must be an object");
    reject_unknown_keys(item,
                        {"k_p", "k_v", "k_pr", "omega_f", "e_setpoint", "q_setpoint",
                         "omega_setpoint", "p_ref_setpoint", "virtual_r", "virtual_l", "line"},
                        tag);
    InverterParams inv;
    inv.k_p = require_number(item, "k_p", tag);
    inv.k_v = require_number(item, "k_v", tag);
    inv.k_pr = require_number(item, "k_pr", tag);
    inv.omega_f = require_number(item, "omega_f", tag);
    inv.e_setpoint = require_number(item, "e_setpoint", tag);
    inv.omega_setpoint = require_number(item, "omega_setpoint", tag);
    inv.q_setpoint = optional_number(item, "q_setpoint", 0.0, tag);
    inv.p_ref_setpoint = optional_number(item, "p_ref_setpoint", 0.0, tag);
    inv.virtual_r = optional_number(item, "virtual_r", 0.0, tag);
    inv.virtual_l = optional_number(item, "virtual_l", 0.0, tag);
    if (!item.contains("line")) throw ConfigError(tag + ": missing key 'line'");
    const auto& line = item.at("line");
    reject_unknown_keys(line, {"resistance", "inductance"}, tag + ".line");
    inv.line.resistance = require_number(line, "resistance", tag + ".line");
    inv.line.inductance = require_number(line, "inductance", tag + ".line");
    cfg.network.inverters.push_back(inv);
  }
  const int n = cfg.network.size();

  if (!j.contains("loads")) throw ConfigError(origin + ": missing key 'loads'");
  const auto& loads = j.at("loads");
  if (!loads.is_object()) throw ConfigError(origin + ": 'loads' must be an object");
  reject_unknown_keys(loads, {"pre_step", "post_step"}, origin + ".loads");
  if (!loads.contains("pre_step")) throw ConfigError(origin + ".loads: missing key 'pre_step'");
  if (!loads.contains("post_step")) throw ConfigError(origin + ".loads: missing key 'post_step'");
  cfg.network.loads = parse_loads(loads.at("pre_step"), origin + ".loads.pre_step");
  cfg.post_step_loads = parse_loads(loads.at("post_step"), origin + ".loads.post_step");

  if (j.contains("load_interpretation")) {
    const auto& v = j.at("load_interpretation");
    if (!v.is_string()) throw ConfigError(origin + ": 'load_interpretation' must be a string");
    const std::string s = v.get<std::string>();
    if (s == "as-given") {
      cfg.network.load_interpretation = LoadInterpretation::AsGiven;
    } else if (s == "per-phase-equivalent") {
      cfg.network.load_interpretation = LoadInterpretation::PerPhaseEquivalent;
    } else {
      throw ConfigError(origin + ": 'load_interpretation' must be 'as-given' or "
                                 "'per-phase-equivalent', got '" +
                        s + "'");
    }
  }
  cfg.network.power_scale = optional_number(
      j, "power_scale", default_power_scale(cfg.network.load_interpretation), origin);

  if (!j.contains("comm_edges")) throw ConfigError(origin + ": missing key 'comm_edges'");
  const auto& edges_json = j.at("comm_edges");
  if (!edges_json.is_array()) throw ConfigError(origin + ": 'comm_edges' must be an array");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : edges_json) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ConfigError(origin + ": 'comm_edges' entries must be [from, to] integer pairs");
    }
    edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);  // 1-based in the file
  }
  cfg.graph = CommGraph(n, std::move(edges));
  cfg.graph.validate_for_consensus();

  if (j.contains("consensus_variant")) {
    if (!j.at("consensus_variant").is_string()) {
      throw ConfigError(origin + ": 'consensus_variant' must be a string");
    }
    const std::string v = j.at("consensus_variant").get<std::string>();
    if (v == "reference-tracking") {
      cfg.consensus_variant = ConsensusVariant::ReferenceTracking;
    } else if (v == "average") {
      cfg.consensus_variant = ConsensusVariant::Average;
    } else {
      throw ConfigError(origin + ": 'consensus_variant' must be 'reference-tracking' or "
                                 "'average', got '" +
                        v + "'");
    }
  }
  cfg.diffusion_constant = optional_number(j, "diffusion_constant", 0.0, origin);
  cfg.delay = optional_number(j, "delay", 0.0, origin);
  if (cfg.delay < 0.0) throw ConfigError(origin + ": 'delay' must be >= 0");

  if (j.contains("spectral_order")) {
    if (!j.at("spectral_order").is_number_integer()) {
      throw ConfigError(origin + ": 'spectral_order' must be an integer");
    }
    cfg.spectral_order = j.at("spectral_order").get<int>();
    if (cfg.spectral_order < 1) throw ConfigError(origin + ": 'spectral_order' must be >= 1");
  }

  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    reject_unknown_keys(t, {"step_time", "end_time"}, origin + ".timing");
    cfg.timing.step_time = optional_number(t, "step_time", cfg.timing.step_time, origin + ".timing");
    cfg.timing.end_time = optional_number(t, "end_time", cfg.timing.end_time, origin + ".timing");
    if (cfg.timing.step_time < 0.0 || cfg.timing.end_time <= cfg.timing.step_time) {
      throw ConfigError(origin + ".timing: need 0 <= step_time < end_time");
    }
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    reject_unknown_keys(t, {"newton", "dde_rel", "dde_abs", "nonlinear_step"},
                        origin + ".tolerances");
    cfg.tolerances.newton = optional_number(t, "newton", cfg.tolerances.newton, origin);
    cfg.tolerances.dde_rel = optional_number(t, "dde_rel", cfg.tolerances.dde_rel, origin);
    cfg.tolerances.dde_abs = optional_number(t, "dde_abs", cfg.tolerances.dde_abs, origin);
    cfg.tolerances.nonlinear_step =
        optional_number(t, "nonlinear_step", cfg.tolerances.nonlinear_step, origin);
  }

  cfg.network.validate();
  return cfg;
}

}  // namespace mgdde
