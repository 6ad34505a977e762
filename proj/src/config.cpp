#include "ostb/config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ostb {

using nlohmann::json;

const char* const kToolVersion = "ostb 1.0.0";

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_num(const json& obj, const std::string& where, const char* key,
               double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(where, std::string("missing required key '") + key + "'");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

long get_int(const json& obj, const std::string& where, const char* key,
             long fallback) {
  const double d = get_num(obj, where, key, static_cast<double>(fallback));
  if (std::abs(d - std::llround(d)) > 1e-9)
    fail(where + "." + key, "expected an integer");
  return std::llround(d);
}

std::string get_str(const json& obj, const std::string& where, const char* key,
                    const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) fail(where + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

void parse_device(const json& j, DeviceParams& d) {
  reject_unknown(j, "device",
                 {"capacitance", "v_out", "v_min", "v_max", "delta_t",
                  "subintervals", "sensing_deadline", "sensing_steps",
                  "transmit_steps", "sleep_current", "sensing_current",
                  "transmit_current", "operating_voltage", "grid_levels"});
  d.capacitance = get_num(j, "device", "capacitance", d.capacitance);
  d.v_out = get_num(j, "device", "v_out", d.v_out);
  d.v_min = get_num(j, "device", "v_min", d.v_min);
  d.v_max = get_num(j, "device", "v_max", d.v_max);
  d.delta_t = get_num(j, "device", "delta_t", d.delta_t);
  d.subintervals = (int)get_int(j, "device", "subintervals", d.subintervals);
  d.sensing_deadline =
      (int)get_int(j, "device", "sensing_deadline", d.sensing_deadline);
  d.sensing_steps = (int)get_int(j, "device", "sensing_steps", d.sensing_steps);
  d.transmit_steps =
      (int)get_int(j, "device", "transmit_steps", d.transmit_steps);
  d.sleep_current = get_num(j, "device", "sleep_current", d.sleep_current);
  d.sensing_current = get_num(j, "device", "sensing_current", d.sensing_current);
  d.transmit_current =
      get_num(j, "device", "transmit_current", d.transmit_current);
  d.operating_voltage =
      get_num(j, "device", "operating_voltage", d.operating_voltage);
  d.grid_levels = (int)get_int(j, "device", "grid_levels", d.grid_levels);
}

void parse_harvest(const json& j, HarvestModel& h) {
  reject_unknown(j, "harvest", {"kind", "lo", "hi", "support"});
  const std::string kind = get_str(j, "harvest", "kind", "uniform");
  if (kind == "uniform") {
    h.kind = HarvestModel::Kind::uniform;
    h.lo = get_num(j, "harvest", "lo", 0.0);
    h.hi = get_num(j, "harvest", "hi", 3e-3, true);
    h.support.clear();
    h.weights.clear();
  } else if (kind == "discrete") {
    h.kind = HarvestModel::Kind::discrete;
    if (!j.contains("support")) fail("harvest", "discrete kind needs 'support'");
    const json& sup = j.at("support");
    if (!sup.is_array() || sup.empty())
      fail("harvest.support", "expected a non-empty array of [amps, prob]");
    h.support.clear();
    h.weights.clear();
    for (const auto& pair : sup) {
      if (!pair.is_array() || pair.size() != 2)
        fail("harvest.support", "each entry must be [amps, prob]");
      h.support.push_back(pair[0].get<double>());
      h.weights.push_back(pair[1].get<double>());
    }
    h.lo = h.hi = 0;
  } else {
    fail("harvest.kind", "expected 'uniform' or 'discrete'");
  }
}

void parse_reward(const json& j, RewardSpec& r) {
  reject_unknown(j, "reward", {"kind", "beta", "theta"});
  const std::string kind = get_str(j, "reward", "kind", "basic");
  if (kind == "basic") {
    r.kind = RewardSpec::Kind::basic;
  } else if (kind == "sigmoid") {
    r.kind = RewardSpec::Kind::sigmoid;
  } else {
    fail("reward.kind", "expected 'basic' or 'sigmoid'");
  }
  r.beta = get_num(j, "reward", "beta", r.beta);
  r.theta = get_num(j, "reward", "theta", r.theta);
}

void parse_solver(const json& j, RunConfig::Solver& s) {
  reject_unknown(j, "solver",
                 {"current_bins", "fine_cells", "smoothing_epsilon",
                  "level_rounding", "lp_cost_tol", "rvi_tol", "rvi_max_iters"});
  s.current_bins = (int)get_int(j, "solver", "current_bins", s.current_bins);
  s.fine_cells = (int)get_int(j, "solver", "fine_cells", s.fine_cells);
  s.smoothing_epsilon =
      get_num(j, "solver", "smoothing_epsilon", s.smoothing_epsilon);
  const std::string rounding = get_str(j, "solver", "level_rounding",
                                       to_string(s.rounding));
  if (rounding == "nearest")
    s.rounding = LevelRounding::nearest;
  else if (rounding == "interpolate")
    s.rounding = LevelRounding::interpolate;
  else
    fail("solver.level_rounding", "expected 'nearest' or 'interpolate'");
  s.lp_cost_tol = get_num(j, "solver", "lp_cost_tol", s.lp_cost_tol);
  s.rvi_tol = get_num(j, "solver", "rvi_tol", s.rvi_tol);
  s.rvi_max_iters = get_int(j, "solver", "rvi_max_iters", s.rvi_max_iters);
}

void parse_sim(const json& j, RunConfig::Sim& s) {
  reject_unknown(j, "sim",
                 {"horizon_seconds", "seed", "initial_voltage", "dynamics"});
  s.horizon_seconds = get_num(j, "sim", "horizon_seconds", s.horizon_seconds);
  s.seed = static_cast<std::uint64_t>(get_int(j, "sim", "seed", (long)s.seed));
  s.initial_voltage = get_num(j, "sim", "initial_voltage", s.initial_voltage);
  const std::string dyn = get_str(j, "sim", "dynamics", "physical");
  if (dyn == "physical")
    s.dynamics = SimDynamics::physical;
  else if (dyn == "model")
    s.dynamics = SimDynamics::model;
  else
    fail("sim.dynamics", "expected 'physical' or 'model'");
}

void parse_output(const json& j, RunConfig::Output& o) {
  reject_unknown(j, "output", {"dir", "formats"});
  o.dir = get_str(j, "output", "dir", o.dir);
  if (j.contains("formats")) {
    const json& f = j.at("formats");
    if (!f.is_array()) fail("output.formats", "expected an array");
    o.csv = o.json = false;
    for (const auto& e : f) {
      const std::string s = e.get<std::string>();
      if (s == "csv")
        o.csv = true;
      else if (s == "json")
        o.json = true;
      else
        fail("output.formats", "unknown format '" + s + "'");
    }
  }
}

}  // namespace

int RunConfig::horizon_intervals() const {
  const double ts = device.interval_seconds();
  const double k = sim.horizon_seconds / ts;
  return static_cast<int>(std::llround(k));
}

void RunConfig::validate() const {
  device.validate();
  harvest.validate();
  if (reward.kind == RewardSpec::Kind::sigmoid) {
    if (reward.beta <= 0) throw ConfigError("reward.beta must be positive");
    if (reward.theta < 0 || reward.theta > 1)
      throw ConfigError("reward.theta must be in [0, 1]");
  }
  if (solver.current_bins < 2)
    throw ConfigError("solver.current_bins must be >= 2");
  if (solver.fine_cells < 256)
    throw ConfigError("solver.fine_cells must be >= 256");
  if (solver.smoothing_epsilon < 0)
    throw ConfigError("solver.smoothing_epsilon must be >= 0");
  const double ts = device.interval_seconds();
  const double k = sim.horizon_seconds / ts;
  if (std::abs(k - std::llround(k)) > 1e-9)
    throw ConfigError(
        "sim.horizon_seconds must be an integer number of main intervals");
  if (sim.initial_voltage >= 0 && sim.initial_voltage > device.v_max + 1e-12)
    throw ConfigError("sim.initial_voltage must be within [0, v_max]");
}

RunConfig parse_run_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top level must be an object");
  reject_unknown(j, "config",
                 {"device", "harvest", "reward", "solver", "sim", "output"});
  if (!j.contains("harvest"))
    throw ConfigError("config: missing required section 'harvest'");

  RunConfig cfg;
  if (j.contains("device")) parse_device(j.at("device"), cfg.device);
  parse_harvest(j.at("harvest"), cfg.harvest);
  if (j.contains("reward")) parse_reward(j.at("reward"), cfg.reward);
  if (j.contains("solver")) parse_solver(j.at("solver"), cfg.solver);
  if (j.contains("sim")) parse_sim(j.at("sim"), cfg.sim);
  if (j.contains("output")) parse_output(j.at("output"), cfg.output);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["device"] = {{"capacitance", cfg.device.capacitance},
                 {"v_out", cfg.device.v_out},
                 {"v_min", cfg.device.v_min},
                 {"v_max", cfg.device.v_max},
                 {"delta_t", cfg.device.delta_t},
                 {"subintervals", cfg.device.subintervals},
                 {"sensing_deadline", cfg.device.sensing_deadline},
                 {"sensing_steps", cfg.device.sensing_steps},
                 {"transmit_steps", cfg.device.transmit_steps},
                 {"sleep_current", cfg.device.sleep_current},
                 {"sensing_current", cfg.device.sensing_current},
                 {"transmit_current", cfg.device.transmit_current},
                 {"operating_voltage", cfg.device.operating_voltage},
                 {"grid_levels", cfg.device.grid_levels}};
  if (cfg.harvest.kind == HarvestModel::Kind::uniform) {
    j["harvest"] = {{"kind", "uniform"}, {"lo", cfg.harvest.lo},
                    {"hi", cfg.harvest.hi}};
  } else {
    json sup = json::array();
    for (size_t i = 0; i < cfg.harvest.support.size(); ++i)
      sup.push_back({cfg.harvest.support[i], cfg.harvest.weights[i]});
    j["harvest"] = {{"kind", "discrete"}, {"support", sup}};
  }
  j["reward"] = {{"kind", cfg.reward.kind == RewardSpec::Kind::basic
                              ? "basic"
                              : "sigmoid"},
                 {"beta", cfg.reward.beta},
                 {"theta", cfg.reward.theta}};
  j["solver"] = {{"current_bins", cfg.solver.current_bins},
                 {"fine_cells", cfg.solver.fine_cells},
                 {"smoothing_epsilon", cfg.solver.smoothing_epsilon},
                 {"level_rounding", to_string(cfg.solver.rounding)},
                 {"lp_cost_tol", cfg.solver.lp_cost_tol},
                 {"rvi_tol", cfg.solver.rvi_tol},
                 {"rvi_max_iters", cfg.solver.rvi_max_iters}};
  j["sim"] = {{"horizon_seconds", cfg.sim.horizon_seconds},
              {"seed", cfg.sim.seed},
              {"initial_voltage", cfg.sim.initial_voltage},
              {"dynamics",
               cfg.sim.dynamics == SimDynamics::physical ? "physical"
                                                         : "model"}};
  j["output"] = {{"dir", cfg.output.dir},
                 {"formats", [&] {
                    json f = json::array();
                    if (cfg.output.csv) f.push_back("csv");
                    if (cfg.output.json) f.push_back("json");
                    return f;
                  }()}};
  return j.dump(2);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a64_hex(run_config_to_json(cfg));
}

void write_artifact(Manifest& manifest, const std::string& path,
                    const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  out.close();
  manifest.outputs.push_back({path, text.size(), fnv1a64_hex(text)});
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  json j;
  j["tool_version"] = manifest.tool_version;
  j["command"] = manifest.command;
  j["created_at"] = manifest.created_at;
  j["config_hash"] = manifest.config_hash;
  j["inputs"] = manifest.inputs;
  json outs = json::array();
  for (const auto& e : manifest.outputs)
    outs.push_back({{"path", e.path}, {"bytes", e.bytes}, {"hash", e.hash}});
  j["outputs"] = outs;
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

}  // namespace ostb
