#include "ostb/serialize.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace ostb {

using nlohmann::json;

namespace {

json grid_to_json(const VoltageGrid& grid) {
  json j = json::array();
  for (double v : grid.levels) j.push_back(v);
  return j;
}

json thresholds_to_json(const MdpModel& model, const ThresholdTables& t) {
  const auto& grid = model.grid;
  auto table = [&](const std::vector<std::optional<int>>& col, int tau0) {
    json out = json::array();
    for (size_t i = 0; i < col.size(); ++i) {
      json row;
      row["tau"] = tau0 + static_cast<int>(i);
      if (col[i]) {
        row["level"] = *col[i] + 1;  // 1-based externally
        row["voltage"] = grid.levels[*col[i]];
      } else {
        row["level"] = "never";
      }
      out.push_back(row);
    }
    return out;
  };
  json j;
  j["sense"] = table(t.sense, 0);
  j["transmit"] = table(t.transmit, model.params.sensing_steps);
  return j;
}

const char* action_code(Action a) {
  switch (a) {
    case Action::sleep: return "l";
    case Action::sense: return "s";
    case Action::transmit: return "t";
  }
  return "?";
}

Action action_from_code(const std::string& s) {
  if (s == "l") return Action::sleep;
  if (s == "s") return Action::sense;
  if (s == "t") return Action::transmit;
  throw std::runtime_error("bad action code '" + s + "'");
}

}  // namespace

std::string model_to_json(const MdpModel& model, const std::string& cfg_hash) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "mdp_model";
  j["config_hash"] = cfg_hash;
  j["level_rounding"] = to_string(model.rounding);
  j["current_bins"] = model.current_bins;
  j["smoothing_epsilon"] = model.smoothing_epsilon;
  j["grid"] = grid_to_json(model.grid);
  j["num_states"] = model.num_states();

  json states = json::array();
  for (const State& s : model.space.states)
    states.push_back({s.level + 1, s.tau, s.flag});
  j["states"] = states;  // [level, tau, flag], canonical order

  json safety;
  safety["sense"] = model.safe_sense;
  safety["transmit"] = model.safe_transmit;
  j["safety"] = safety;

  // Kernel in coordinate-list form: [state, action, next_state, probability],
  // 1-based state indices.
  json coo = json::array();
  json rewards = json::array();
  for (int s = 0; s < model.num_states(); ++s) {
    for (const auto& e : model.kernel[s]) {
      rewards.push_back({s + 1, action_code(e.action), e.reward});
      for (size_t k = 0; k < e.next.idx.size(); ++k)
        coo.push_back(
            {s + 1, action_code(e.action), e.next.idx[k] + 1, e.next.val[k]});
    }
  }
  j["transitions"] = coo;
  j["rewards"] = rewards;
  return j.dump();
}

std::string policy_to_json(const MdpModel& model, const PolicyArtifact& art) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "policy";
  j["config_hash"] = art.config_hash;
  j["grid"] = grid_to_json(model.grid);
  j["gain"] = art.gain;
  j["lp_objective"] = art.lp_objective;
  j["rvi_gain"] = art.rvi_gain;
  j["expected_tasks_per_interval"] = art.expected_tasks_per_interval;
  j["thresholds"] = thresholds_to_json(model, art.thresholds);
  std::string actions;
  actions.reserve(art.action.size());
  for (Action a : art.action) actions += action_code(a);
  j["actions"] = actions;  // per state, canonical order
  j["unichain"] = {{"closed_classes", art.unichain.closed_classes},
                   {"recurrent_states", art.unichain.recurrent_states},
                   {"transient_states", art.unichain.transient_states},
                   {"contains_reset_superstate",
                    art.unichain.reset_superstate_recurrent}};
  return j.dump();
}

PolicyArtifact policy_from_json(const std::string& text,
                                const std::string& expected_hash) {
  json j = json::parse(text);
  if (j.value("kind", "") != "policy")
    throw std::runtime_error("not a policy artifact");
  PolicyArtifact art;
  art.config_hash = j.value("config_hash", "");
  if (!expected_hash.empty() && art.config_hash != expected_hash)
    throw std::runtime_error("policy config hash " + art.config_hash +
                             " does not match configuration " + expected_hash);
  const std::string actions = j.at("actions").get<std::string>();
  for (char c : actions) art.action.push_back(action_from_code(std::string(1, c)));
  art.gain = j.value("gain", 0.0);
  art.lp_objective = j.value("lp_objective", 0.0);
  art.rvi_gain = j.value("rvi_gain", 0.0);
  art.expected_tasks_per_interval =
      j.value("expected_tasks_per_interval", 0.0);
  return art;
}

std::string unichain_report_to_json(const MdpModel& model,
                                    const UnichainReport& rep) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "recurrence_report";
  j["num_states"] = model.num_states();
  j["closed_classes"] = rep.closed_classes;
  j["closed_class_sizes"] = rep.closed_class_sizes;
  j["recurrent_states"] = rep.recurrent_states;
  j["transient_states"] = rep.transient_states;
  j["contains_reset_superstate"] = rep.reset_superstate_recurrent;
  return j.dump();
}

std::string sim_report_to_json(const SimReport& rep, SchedulerKind kind,
                               const std::string& cfg_hash) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "sim_report";
  j["config_hash"] = cfg_hash;
  j["scheduler"] = to_string(kind);
  j["intervals"] = rep.intervals;
  j["completed_per_interval"] = rep.completed_per_interval;
  j["sense_completed"] = rep.sense_completed;
  j["tx_completed"] = rep.tx_completed;
  j["sense_failures"] = rep.sense_failures;
  j["tx_failures"] = rep.tx_failures;
  j["sense_skipped"] = rep.sense_skipped;
  j["tx_skipped"] = rep.tx_skipped;
  j["total_latency_seconds"] = rep.total_latency_seconds;
  j["max_voltage_seen"] = rep.max_voltage_seen;
  return j.dump();
}

std::string sim_report_to_csv(const SimReport& rep) {
  std::string out = "index,sensing_start,tx_start,fail_s,fail_t,v_end\n";
  char buf[128];
  for (size_t k = 0; k < rep.records.size(); ++k) {
    const auto& r = rep.records[k];
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%d,%.6g\n", k, r.sense_start,
                  r.tx_start, r.sense_fail ? 1 : 0, r.tx_fail ? 1 : 0, r.v_end);
    out += buf;
  }
  return out;
}

std::string comparison_to_json(const ComparisonReport& rep,
                               const std::string& cfg_hash) {
  auto summary = [](const SimReport& r, SchedulerKind k) {
    json j;
    j["scheduler"] = to_string(k);
    j["completed_per_interval"] = r.completed_per_interval;
    j["sense_failures"] = r.sense_failures;
    j["tx_failures"] = r.tx_failures;
    j["sense_skipped"] = r.sense_skipped;
    j["tx_skipped"] = r.tx_skipped;
    j["total_latency_seconds"] = r.total_latency_seconds;
    return j;
  };
  json j;
  j["format_version"] = 1;
  j["kind"] = "comparison";
  j["config_hash"] = cfg_hash;
  j["first"] = summary(rep.first, rep.first_kind);
  j["second"] = summary(rep.second, rep.second_kind);
  j["completion_improvement_pct"] = rep.completion_improvement_pct;
  j["failure_reduction_pct"] = rep.failure_reduction_pct;
  j["latency_reduction_pct"] = rep.latency_reduction_pct;
  return j.dump();
}

}  // namespace ostb
