#include "ostb/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ostb {

using nlohmann::json;

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

Manifest start_manifest(const RunConfig& cfg, const std::string& command) {
  Manifest m;
  m.tool_version = kToolVersion;
  m.command = command;
  m.created_at = now_iso8601();
  m.config_hash = config_hash(cfg);
  return m;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

MdpModel build_model(const RunConfig& cfg) {
  cfg.validate();
  MdpBuildOptions opt;
  opt.current_bins = cfg.solver.current_bins;
  opt.fine_cells = cfg.solver.fine_cells;
  opt.rounding = cfg.solver.rounding;
  opt.smoothing_epsilon = cfg.solver.smoothing_epsilon;
  return build_mdp(cfg.device, cfg.harvest, cfg.reward, opt);
}

SolveOutput solve_model(const RunConfig& cfg) {
  return solve_model_with(build_model(cfg), cfg);
}

SolveOutput solve_model_with(MdpModel model, const RunConfig& cfg) {
  SolveOutput out;
  out.model = std::move(model);
  LpOptions lp;
  lp.cost_tol = cfg.solver.lp_cost_tol;
  try {
    out.occupation = solve_occupation_lp(out.model, lp);
    out.rvi = relative_value_iteration(out.model, cfg.solver.rvi_tol,
                                       cfg.solver.rvi_max_iters);
  } catch (const std::exception& e) {
    throw SolverFailure(e.what());
  }
  out.policy.action = extract_policy(out.model, out.occupation, out.rvi);
  out.policy.thresholds = extract_thresholds(out.model, out.policy.action);
  out.policy.unichain = verify_unichain(out.model, out.policy.action);
  out.policy.lp_objective = out.occupation.objective;
  out.policy.rvi_gain = out.rvi.gain;
  out.policy.config_hash = config_hash(cfg);
  if (out.policy.unichain.closed_classes == 1) {
    out.gain = make_gain_report(out.model, out.policy.action);
    out.gain_available = true;
    out.policy.gain = out.gain.gain_per_epoch;
    out.policy.expected_tasks_per_interval =
        out.gain.expected_tasks_per_interval;
  } else {
    out.policy.gain = out.occupation.objective;
  }
  return out;
}

SimConfig make_sim_config(const RunConfig& cfg, SchedulerKind kind,
                          std::vector<Action> policy) {
  SimConfig sc;
  sc.params = cfg.device;
  sc.harvest = cfg.harvest;
  sc.scheduler = kind;
  sc.policy = std::move(policy);
  sc.horizon_intervals = cfg.horizon_intervals();
  sc.master_seed = cfg.sim.seed;
  sc.initial_voltage = cfg.sim.initial_voltage;
  sc.dynamics = cfg.sim.dynamics;
  return sc;
}

CommandResult cmd_build(const RunConfig& cfg, std::string out_dir) {
  if (out_dir.empty()) out_dir = cfg.output.dir;
  Manifest manifest = start_manifest(cfg, "build");
  const MdpModel model = build_model(cfg);
  CommandResult res;
  const std::string path = join_path(out_dir, "model.json");
  write_artifact(manifest, path, model_to_json(model, manifest.config_hash));
  res.written.push_back(path);
  const std::string mpath = join_path(out_dir, "model.manifest.json");
  write_manifest(manifest, mpath);
  res.written.push_back(mpath);
  return res;
}

CommandResult cmd_solve(const RunConfig& cfg, std::string out_dir) {
  if (out_dir.empty()) out_dir = cfg.output.dir;
  Manifest manifest = start_manifest(cfg, "solve");
  SolveOutput so = solve_model(cfg);
  CommandResult res;
  const std::string ppath = join_path(out_dir, "policy.json");
  write_artifact(manifest, ppath, policy_to_json(so.model, so.policy));
  res.written.push_back(ppath);
  const std::string upath = join_path(out_dir, "recurrence.json");
  write_artifact(manifest, upath,
                 unichain_report_to_json(so.model, so.policy.unichain));
  res.written.push_back(upath);
  const std::string mpath = join_path(out_dir, "policy.manifest.json");
  write_manifest(manifest, mpath);
  res.written.push_back(mpath);
  return res;
}

CommandResult cmd_simulate(const RunConfig& cfg, const std::string& policy_path,
                           std::string out_dir, SchedulerKind scheduler) {
  if (out_dir.empty()) out_dir = cfg.output.dir;
  Manifest manifest = start_manifest(cfg, "simulate");
  manifest.inputs.push_back(policy_path);

  MdpModel model = build_model(cfg);
  std::vector<Action> policy;
  if (scheduler == SchedulerKind::ostb) {
    std::ifstream in(policy_path);
    if (!in) throw ConfigError("cannot open policy file: " + policy_path);
    std::stringstream ss;
    ss << in.rdbuf();
    PolicyArtifact art;
    try {
      art = policy_from_json(ss.str(), manifest.config_hash);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    policy = std::move(art.action);
  }
  SimConfig sc = make_sim_config(cfg, scheduler, std::move(policy));
  const SimReport rep = simulate(sc, &model);

  CommandResult res;
  if (cfg.output.json) {
    const std::string p = join_path(out_dir, "sim_report.json");
    write_artifact(manifest, p,
                   sim_report_to_json(rep, scheduler, manifest.config_hash));
    res.written.push_back(p);
  }
  if (cfg.output.csv) {
    const std::string p = join_path(out_dir, "sim_intervals.csv");
    write_artifact(manifest, p, sim_report_to_csv(rep));
    res.written.push_back(p);
  }
  const std::string mpath = join_path(out_dir, "sim.manifest.json");
  write_manifest(manifest, mpath);
  res.written.push_back(mpath);
  return res;
}

CommandResult cmd_compare(const RunConfig& cfg, std::string out_dir) {
  if (out_dir.empty()) out_dir = cfg.output.dir;
  Manifest manifest = start_manifest(cfg, "compare");
  SolveOutput so = solve_model(cfg);
  SimConfig ostb_cfg =
      make_sim_config(cfg, SchedulerKind::ostb, so.policy.action);
  SimConfig alap_cfg = make_sim_config(cfg, SchedulerKind::alap);
  const ComparisonReport rep =
      compare_schedulers(ostb_cfg, alap_cfg, &so.model);

  CommandResult res;
  const std::string p = join_path(out_dir, "comparison.json");
  write_artifact(manifest, p, comparison_to_json(rep, manifest.config_hash));
  res.written.push_back(p);
  if (cfg.output.csv) {
    const std::string p1 = join_path(out_dir, "ostb_intervals.csv");
    write_artifact(manifest, p1, sim_report_to_csv(rep.first));
    res.written.push_back(p1);
    const std::string p2 = join_path(out_dir, "alap_intervals.csv");
    write_artifact(manifest, p2, sim_report_to_csv(rep.second));
    res.written.push_back(p2);
  }
  const std::string mpath = join_path(out_dir, "compare.manifest.json");
  write_manifest(manifest, mpath);
  res.written.push_back(mpath);
  return res;
}

CommandResult cmd_verify(const RunConfig& cfg, std::string out_dir) {
  if (out_dir.empty()) out_dir = cfg.output.dir;
  Manifest manifest = start_manifest(cfg, "verify");
  SolveOutput so = solve_model(cfg);  // extract_thresholds already ran
  std::vector<std::string> failures;
  if (so.policy.unichain.closed_classes != 1)
    failures.push_back("induced chain has " +
                       std::to_string(so.policy.unichain.closed_classes) +
                       " closed recurrent classes");
  else if (!so.policy.unichain.reset_superstate_recurrent)
    failures.push_back("recurrent class misses the reset superstate (0,0)");
  const double rel = std::abs(so.occupation.objective - so.rvi.gain) /
                     std::max(1e-12, std::abs(so.rvi.gain));
  if (rel > 1e-6)
    failures.push_back("LP and RVI gains differ by " + std::to_string(rel) +
                       " relative");

  json j;
  j["format_version"] = 1;
  j["kind"] = "verification";
  j["config_hash"] = manifest.config_hash;
  j["lp_objective"] = so.occupation.objective;
  j["rvi_gain"] = so.rvi.gain;
  j["lp_rvi_relative_gap"] = rel;
  j["closed_classes"] = so.policy.unichain.closed_classes;
  j["threshold_structured"] = true;
  j["failures"] = failures;
  j["passed"] = failures.empty();

  CommandResult res;
  const std::string p = join_path(out_dir, "verification.json");
  write_artifact(manifest, p, j.dump(2));
  res.written.push_back(p);
  const std::string mpath = join_path(out_dir, "verify.manifest.json");
  write_manifest(manifest, mpath);
  res.written.push_back(mpath);
  if (!failures.empty()) {
    std::string msg = "verification failed:";
    for (const auto& f : failures) msg += " " + f + ";";
    throw VerificationError(msg);
  }
  return res;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

namespace {

struct SweepWriter {
  Manifest manifest;
  CommandResult result;
  std::string dir;

  void emit(const std::string& name, const std::string& text) {
    const std::string p = join_path(dir, name);
    write_artifact(manifest, p, text);
    result.written.push_back(p);
  }
};

// fig3: safety probability and reward shapes across the grid for the small
// 2.7 mF capacitor configuration.
void sweep_fig3(const RunConfig& base, SweepWriter& w) {
  RunConfig cfg = base;
  cfg.device.capacitance = 2.7e-3;
  cfg.device.v_out = 2.4;
  cfg.harvest = HarvestModel::uniform_range(0.0, 3e-3);
  cfg.validate();
  const VoltageGrid grid = VoltageGrid::make(cfg.device);
  const std::vector<double> thetas = {0.7, 0.9, 0.95};
  const double beta = 15.0;

  std::string csv =
      "voltage,p_safe_sense,p_safe_transmit,"
      "sigmoid_sense_t070,sigmoid_sense_t090,sigmoid_sense_t095,"
      "sigmoid_tx_t070,sigmoid_tx_t090,sigmoid_tx_t095\n";
  std::vector<double> ps(grid.size()), pt(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    ps[i] = safety_probability(Mode::sense, grid.levels[i], cfg.device,
                               cfg.harvest, cfg.solver.current_bins,
                               cfg.solver.fine_cells);
    pt[i] = safety_probability(Mode::transmit, grid.levels[i], cfg.device,
                               cfg.harvest, cfg.solver.current_bins,
                               cfg.solver.fine_cells);
  }
  for (int i = 0; i < grid.size(); ++i) {
    csv += fmt6(grid.levels[i]) + "," + fmt6(ps[i]) + "," + fmt6(pt[i]);
    for (double th : thetas)
      csv += "," + fmt6(sigmoid_reward(ps[i], ps[grid.size() - 1], beta, th));
    for (double th : thetas)
      csv += "," + fmt6(sigmoid_reward(pt[i], pt[grid.size() - 1], beta, th));
    csv += "\n";
  }
  w.emit("fig3_reward_curves.csv", csv);
}

// fig4: threshold tables for the wide and narrow harvest ranges.
void sweep_fig4(const RunConfig& base, SweepWriter& w) {
  const std::vector<std::pair<std::string, double>> ranges = {
      {"U[0,0.3mA]", 0.3e-3}, {"U[0,3mA]", 3e-3}};
  std::string csv = "harvest,window,tau,threshold_level,threshold_voltage\n";
  for (const auto& [label, hi] : ranges) {
    RunConfig cfg = base;
    cfg.device.sensing_deadline = 15;
    cfg.device.sensing_steps = 5;
    cfg.device.transmit_steps = 20;
    cfg.harvest = HarvestModel::uniform_range(0.0, hi);
    cfg.validate();
    SolveOutput so = solve_model(cfg);
    const auto& t = so.policy.thresholds;
    for (size_t i = 0; i < t.sense.size(); ++i) {
      csv += label + ",sense," + std::to_string(i) + ",";
      if (t.sense[i])
        csv += std::to_string(*t.sense[i] + 1) + "," +
               fmt6(so.model.grid.levels[*t.sense[i]]);
      else
        csv += "never,";
      csv += "\n";
    }
    for (size_t i = 0; i < t.transmit.size(); ++i) {
      csv += label + ",transmit," +
             std::to_string(i + cfg.device.sensing_steps) + ",";
      if (t.transmit[i])
        csv += std::to_string(*t.transmit[i] + 1) + "," +
               fmt6(so.model.grid.levels[*t.transmit[i]]);
      else
        csv += "never,";
      csv += "\n";
    }
  }
  w.emit("fig4_thresholds.csv", csv);
}

// fig5: running average of completed tasks for several capacitances.
void sweep_fig5(const RunConfig& base, SweepWriter& w, int threads) {
  const std::vector<double> caps = {2.7e-3, 4.7e-3, 9.4e-3};
  std::vector<std::string> parts(caps.size());
  parallel_for(static_cast<int>(caps.size()), threads, [&](int i) {
    RunConfig cfg = base;
    cfg.device.capacitance = caps[i];
    cfg.validate();
    SolveOutput so = solve_model(cfg);
    SimConfig sc_o = make_sim_config(cfg, SchedulerKind::ostb, so.policy.action);
    SimConfig sc_a = make_sim_config(cfg, SchedulerKind::alap);
    const SimReport rep_o = simulate(sc_o, &so.model);
    const SimReport rep_a = simulate(sc_a, &so.model);
    std::string rows;
    auto series = [&](const SimReport& rep, const char* label) {
      long completed = 0;
      for (size_t k = 0; k < rep.records.size(); ++k) {
        completed += (rep.records[k].sense_done ? 1 : 0) +
                     (rep.records[k].tx_done ? 1 : 0);
        if ((k + 1) % 10 == 0)
          rows += fmt6(caps[i] * 1e3) + "," + label + "," +
                  std::to_string(k + 1) + "," +
                  fmt6(static_cast<double>(completed) / (k + 1)) + "\n";
      }
    };
    series(rep_o, "ostb");
    series(rep_a, "alap");
    parts[i] = rows;
  });
  std::string csv = "capacitance_mF,scheduler,interval,avg_completed\n";
  for (const auto& s : parts) csv += s;
  w.emit("fig5_completion_series.csv", csv);
}

// fig6: completion rate across the harvest range for several v_out values.
void sweep_fig6(const RunConfig& base, SweepWriter& w, int threads) {
  const std::vector<double> vouts = {1.8, 2.1, 2.4};
  std::vector<double> gammas;
  for (double g = 1.0; g <= 12.0 + 1e-9; g += 1.0) gammas.push_back(g);
  const int n = static_cast<int>(vouts.size() * gammas.size());
  std::vector<std::string> parts(n);
  parallel_for(n, threads, [&](int idx) {
    const double vout = vouts[idx / gammas.size()];
    const double gamma = gammas[idx % gammas.size()];
    RunConfig cfg = base;
    cfg.device.v_out = vout;
    cfg.harvest = HarvestModel::uniform_range(0.0, gamma * 1e-3);
    cfg.validate();
    SolveOutput so = solve_model(cfg);
    SimConfig sc_o = make_sim_config(cfg, SchedulerKind::ostb, so.policy.action);
    SimConfig sc_a = make_sim_config(cfg, SchedulerKind::alap);
    const SimReport rep_o = simulate(sc_o, &so.model);
    const SimReport rep_a = simulate(sc_a, &so.model);
    std::string rows;
    for (const auto& [rep, label] :
         {std::pair<const SimReport&, const char*>{rep_o, "ostb"},
          std::pair<const SimReport&, const char*>{rep_a, "alap"}}) {
      rows += fmt6(vout) + "," + fmt6(gamma) + "," + label + "," +
              fmt6(rep.completed_per_interval) + "," +
              std::to_string(rep.sense_failures) + "," +
              std::to_string(rep.tx_failures) + "," +
              fmt6(rep.total_latency_seconds) + "\n";
    }
    parts[idx] = rows;
  });
  std::string csv =
      "v_out,gamma_mA,scheduler,completed_per_interval,sense_failures,"
      "tx_failures,latency_s\n";
  for (const auto& s : parts) csv += s;
  w.emit("fig6_completion_vs_gamma.csv", csv);
}

// tab2 and tab3 share the same three-distribution comparison runs.
void sweep_tables(const RunConfig& base, SweepWriter& w, int threads) {
  const std::vector<double> gammas = {3e-3, 6e-3, 9e-3};
  std::vector<ComparisonReport> reps(gammas.size());
  parallel_for(static_cast<int>(gammas.size()), threads, [&](int i) {
    RunConfig cfg = base;
    cfg.harvest = HarvestModel::uniform_range(0.0, gammas[i]);
    cfg.validate();
    SolveOutput so = solve_model(cfg);
    SimConfig sc_o = make_sim_config(cfg, SchedulerKind::ostb, so.policy.action);
    SimConfig sc_a = make_sim_config(cfg, SchedulerKind::alap);
    reps[i] = compare_schedulers(sc_o, sc_a, &so.model);
  });
  std::string tab2 =
      "harvest_hi_mA,scheduler,sense_failures,tx_failures\n";
  std::string tab3 = "harvest_hi_mA,scheduler,total_latency_s\n";
  for (size_t i = 0; i < gammas.size(); ++i) {
    const std::string g = fmt6(gammas[i] * 1e3);
    tab2 += g + ",ostb," + std::to_string(reps[i].first.sense_failures) + "," +
            std::to_string(reps[i].first.tx_failures) + "\n";
    tab2 += g + ",alap," + std::to_string(reps[i].second.sense_failures) +
            "," + std::to_string(reps[i].second.tx_failures) + "\n";
    tab3 += g + ",ostb," + fmt6(reps[i].first.total_latency_seconds) + "\n";
    tab3 += g + ",alap," + fmt6(reps[i].second.total_latency_seconds) + "\n";
  }
  w.emit("tab2_power_failures.csv", tab2);
  w.emit("tab3_latency.csv", tab3);
}

// combined: long-run gain against task execution times, sigmoid reward.
void sweep_combined(const RunConfig& base, SweepWriter& w, int threads) {
  const std::vector<double> thetas = {0.7, 0.9, 0.95};
  const std::vector<int> ns_values = {5, 6, 7, 8, 9, 10};
  const std::vector<int> nt_values = {20, 24, 28, 32, 36, 40};
  struct Point {
    bool sweep_ns;
    int steps;
    double theta;
  };
  std::vector<Point> points;
  for (double th : thetas)
    for (int v : ns_values) points.push_back({true, v, th});
  for (double th : thetas)
    for (int v : nt_values) points.push_back({false, v, th});
  std::vector<std::string> parts(points.size());
  parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
    RunConfig cfg = base;
    cfg.reward.kind = RewardSpec::Kind::sigmoid;
    cfg.reward.beta = 25.0;
    cfg.reward.theta = points[i].theta;
    if (points[i].sweep_ns) {
      cfg.device.sensing_steps = points[i].steps;
      cfg.device.transmit_steps = 40;
    } else {
      cfg.device.sensing_steps = 5;
      cfg.device.transmit_steps = points[i].steps;
    }
    cfg.validate();
    SolveOutput so = solve_model(cfg);
    const double per_interval =
        so.gain_available ? so.gain.expected_reward_per_interval : 0.0;
    parts[i] = std::string(points[i].sweep_ns ? "sense" : "transmit") + "," +
               std::to_string(points[i].steps) + "," + fmt6(points[i].theta) +
               "," + fmt6(so.policy.gain) + "," + fmt6(per_interval) + "\n";
  });
  std::string csv =
      "swept_task,steps,theta,gain_per_epoch,expected_reward_per_interval\n";
  for (const auto& s : parts) csv += s;
  w.emit("combined_gain_vs_execution_time.csv", csv);
}

// abstract: multi-seed headline comparison on the default device.
void sweep_abstract(const RunConfig& base, SweepWriter& w, int threads) {
  const int seeds = 20;
  RunConfig cfg = base;
  cfg.validate();
  SolveOutput so = solve_model(cfg);
  std::vector<ComparisonReport> reps(seeds);
  parallel_for(seeds, threads, [&](int i) {
    RunConfig c = cfg;
    c.sim.seed = cfg.sim.seed + i;
    SimConfig sc_o = make_sim_config(c, SchedulerKind::ostb, so.policy.action);
    SimConfig sc_a = make_sim_config(c, SchedulerKind::alap);
    reps[i] = compare_schedulers(sc_o, sc_a, &so.model);
  });
  double comp = 0, fail = 0, lat = 0, rate_o = 0, rate_a = 0;
  double fails_o = 0, fails_a = 0, lat_o = 0, lat_a = 0;
  for (const auto& r : reps) {
    rate_o += r.first.completed_per_interval;
    rate_a += r.second.completed_per_interval;
    fails_o += r.first.sense_failures + r.first.tx_failures;
    fails_a += r.second.sense_failures + r.second.tx_failures;
    lat_o += r.first.total_latency_seconds;
    lat_a += r.second.total_latency_seconds;
  }
  rate_o /= seeds;
  rate_a /= seeds;
  fails_o /= seeds;
  fails_a /= seeds;
  lat_o /= seeds;
  lat_a /= seeds;
  comp = (rate_o - rate_a) / rate_a * 100.0;
  fail = fails_a > 0 ? (1.0 - fails_o / fails_a) * 100.0 : 0.0;
  lat = lat_a > 0 ? (1.0 - lat_o / lat_a) * 100.0 : 0.0;
  json j;
  j["kind"] = "headline";
  j["seeds"] = seeds;
  j["ostb"] = {{"completed_per_interval", rate_o},
               {"power_failures", fails_o},
               {"latency_s", lat_o}};
  j["alap"] = {{"completed_per_interval", rate_a},
               {"power_failures", fails_a},
               {"latency_s", lat_a}};
  j["completion_improvement_pct"] = comp;
  j["failure_reduction_pct"] = fail;
  j["latency_reduction_pct"] = lat;
  w.emit("abstract_headline.json", j.dump(2));
}

}  // namespace

std::vector<std::string> recipe_names() {
  return {"fig3", "fig4", "fig5", "fig6", "tab2", "tab3", "combined",
          "abstract"};
}

CommandResult cmd_sweep(const RunConfig& base, const std::string& recipe,
                        std::string out_dir, int threads) {
  if (out_dir.empty()) out_dir = base.output.dir;
  SweepWriter w;
  w.manifest = start_manifest(base, "sweep " + recipe);
  w.dir = out_dir;
  if (recipe == "fig3")
    sweep_fig3(base, w);
  else if (recipe == "fig4")
    sweep_fig4(base, w);
  else if (recipe == "fig5")
    sweep_fig5(base, w, threads);
  else if (recipe == "fig6")
    sweep_fig6(base, w, threads);
  else if (recipe == "tab2" || recipe == "tab3")
    sweep_tables(base, w, threads);
  else if (recipe == "combined")
    sweep_combined(base, w, threads);
  else if (recipe == "abstract")
    sweep_abstract(base, w, threads);
  else
    throw ConfigError("unknown sweep recipe '" + recipe +
                      "'; known: fig3 fig4 fig5 fig6 tab2 tab3 combined "
                      "abstract");
  const std::string mpath =
      join_path(out_dir, "sweep_" + recipe + ".manifest.json");
  write_manifest(w.manifest, mpath);
  w.result.written.push_back(mpath);
  return w.result;
}

}  // namespace ostb
