#include "ostb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ostb {

const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::ostb: return "ostb";
    case SchedulerKind::alap: return "alap";
    case SchedulerKind::asap: return "asap-greedy";
  }
  return "?";
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream) {
  // splitmix64 over the pair; decorrelates neighbouring streams.
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

struct StepModel {
  double alpha[3];
  double gain[3];  // R (1 - alpha)
  double dv_detached;  // delta_t / C, volts per amp while the load is off

  explicit StepModel(const DeviceParams& p) {
    for (Mode m : {Mode::sleep, Mode::sense, Mode::transmit}) {
      const int i = static_cast<int>(m);
      alpha[i] = p.decay_per_step(m);
      gain[i] = p.resistance(m) * (1.0 - alpha[i]);
    }
    dv_detached = p.delta_t / p.capacitance;
  }

  double step(double v, Mode m, double current) const {
    const int i = static_cast<int>(m);
    return alpha[i] * v + gain[i] * current;
  }
};

Action decide(const SimConfig& cfg, const MdpModel* model, int level, int tau,
              int flag) {
  switch (cfg.scheduler) {
    case SchedulerKind::alap: return alap_decide(tau, flag, cfg.params);
    case SchedulerKind::asap: return asap_decide(tau, flag, cfg.params);
    case SchedulerKind::ostb: {
      const int s = model->space.state_index(level, tau, flag);
      return cfg.policy[s];
    }
  }
  return Action::sleep;
}

SimReport simulate_physical(const SimConfig& cfg, const MdpModel* model) {
  const DeviceParams& p = cfg.params;
  const StepModel sm(p);
  const VoltageGrid grid = model ? model->grid : VoltageGrid::make(p);
  const int m = p.subintervals;

  SimReport rep;
  rep.intervals = cfg.horizon_intervals;
  rep.records.resize(cfg.horizon_intervals);
  double v = cfg.initial_voltage < 0 ? p.v_max : cfg.initial_voltage;
  rep.max_voltage_seen = v;

  for (int k = 0; k < cfg.horizon_intervals; ++k) {
    std::mt19937_64 rng(stream_seed(cfg.master_seed, k));
    IntervalRecord& rec = rep.records[k];
    int tau = 0, flag = 0;
    bool detached = false;

    while (tau < m) {
      if (detached) {
        v = std::min(v + sm.dv_detached * cfg.harvest.sample(uniform01(rng)),
                     p.v_max);
        ++tau;
        continue;
      }
      Action a = Action::sleep;
      if (v >= p.v_out)  // below the turn-off threshold the device is off
        a = decide(cfg, model, grid.nearest_level(v), tau, flag);

      if (a == Action::sleep) {
        v = std::min(sm.step(v, Mode::sleep, cfg.harvest.sample(uniform01(rng))),
                     p.v_max);
        rep.max_voltage_seen = std::max(rep.max_voltage_seen, v);
        ++tau;
        continue;
      }

      const Mode mode = mode_of(a);
      const int steps = p.task_steps(mode);
      if (a == Action::sense)
        rec.sense_start = tau;
      else
        rec.tx_start = tau;
      bool failed = false;
      for (int j = 0; j < steps; ++j) {
        v = std::min(sm.step(v, mode, cfg.harvest.sample(uniform01(rng))),
                     p.v_max);
        rep.max_voltage_seen = std::max(rep.max_voltage_seen, v);
        ++tau;
        if (v < p.v_out) {
          failed = true;
          break;
        }
      }
      if (failed) {
        detached = true;
        if (a == Action::sense)
          rec.sense_fail = true;
        else
          rec.tx_fail = true;
      } else if (a == Action::sense) {
        rec.sense_done = true;
        flag = 1;
      } else {
        rec.tx_done = true;
        flag = 2;
      }
    }
    rec.v_end = v;
  }
  return rep;
}

/// Chain-dynamics run: the state follows the MDP kernel of the scheduler's
/// actions; a started task counts as completed with probability equal to its
/// safety value. Used to cross-validate the solver's stationary analysis.
SimReport simulate_model(const SimConfig& cfg, const MdpModel& model) {
  const DeviceParams& p = cfg.params;
  const auto& sp = model.space;
  const int m = p.subintervals;
  SimReport rep;
  rep.intervals = cfg.horizon_intervals;
  rep.records.resize(cfg.horizon_intervals);

  const VoltageGrid& grid = model.grid;
  double v0 = cfg.initial_voltage < 0 ? p.v_max : cfg.initial_voltage;
  int level = grid.nearest_level(v0);
  rep.max_voltage_seen = grid.levels[level];

  for (int k = 0; k < cfg.horizon_intervals; ++k) {
    std::mt19937_64 rng(stream_seed(cfg.master_seed, k));
    IntervalRecord& rec = rep.records[k];
    int tau = 0, flag = 0;
    while (tau < m) {
      const int s = sp.state_index(level, tau, flag);
      const Action a = decide(cfg, &model, level, tau, flag);
      const ActionEntry* e = model.entry(s, a);
      if (!e) throw std::logic_error("scheduler chose a disallowed action");
      if (a == Action::sense) {
        rec.sense_start = tau;
        if (uniform01(rng) < model.safe_sense[level]) {
          rec.sense_done = true;
        } else {
          rec.sense_fail = true;
        }
        flag = 1;
        tau += p.sensing_steps;
      } else if (a == Action::transmit) {
        rec.tx_start = tau;
        // Completion draws are independent per task so that the long-run
        // count matches the stationary safety-weighted expectation exactly.
        if (uniform01(rng) < model.safe_transmit[level]) {
          rec.tx_done = true;
        } else {
          rec.tx_fail = true;
        }
        flag = 2;
        tau += p.transmit_steps;
      } else {
        tau += 1;
      }
      // Sample the next voltage level from the kernel row.
      const double u = uniform01(rng);
      double acc = 0;
      int next_level = level;
      for (size_t i = 0; i < e->next.idx.size(); ++i) {
        acc += e->next.val[i];
        if (u < acc) {
          next_level = sp.states[e->next.idx[i]].level;
          break;
        }
        next_level = sp.states[e->next.idx[i]].level;
      }
      level = next_level;
    }
    rec.v_end = grid.levels[level];
    rep.max_voltage_seen = std::max(rep.max_voltage_seen, rec.v_end);
  }
  return rep;
}

void finalize(SimReport& rep, const DeviceParams& p) {
  long completed = 0;
  for (const auto& rec : rep.records) {
    if (rec.sense_done) ++rep.sense_completed;
    if (rec.tx_done) ++rep.tx_completed;
    if (rec.sense_fail) ++rep.sense_failures;
    if (rec.tx_fail) ++rep.tx_failures;
    if (rec.sense_start < 0) ++rep.sense_skipped;
    if (rec.sense_done && rec.tx_start < 0) ++rep.tx_skipped;
    // In physical dynamics a transmit only ever runs after a completed
    // sensing, so this equals the product form xi_s (1 + xi_t).
    completed += (rec.sense_done ? 1 : 0) + (rec.tx_done ? 1 : 0);
  }
  rep.completed_per_interval =
      rep.intervals > 0 ? static_cast<double>(completed) / rep.intervals : 0;
  rep.total_latency_seconds = latency_seconds(rep, p);
}

}  // namespace

Action alap_decide(int tau, int flag, const DeviceParams& p) {
  if (flag == 0 && tau == p.sensing_deadline) return Action::sense;
  if (p.has_transmit_task() && flag == 1 &&
      tau == p.subintervals - p.transmit_steps)
    return Action::transmit;
  return Action::sleep;
}

Action asap_decide(int tau, int flag, const DeviceParams& p) {
  if (flag == 0 && tau <= p.sensing_deadline) return Action::sense;
  if (p.has_transmit_task() && flag == 1 && tau >= p.sensing_steps &&
      tau <= p.subintervals - p.transmit_steps)
    return Action::transmit;
  return Action::sleep;
}

SimReport simulate(const SimConfig& cfg, const MdpModel* model) {
  cfg.params.validate();
  cfg.harvest.validate();
  if (cfg.horizon_intervals < 0)
    throw std::invalid_argument("horizon must be non-negative");
  if (cfg.initial_voltage > cfg.params.v_max + 1e-12)
    throw std::invalid_argument("initial_voltage above v_max");
  if (cfg.scheduler == SchedulerKind::ostb) {
    if (!model) throw std::invalid_argument("ostb scheduler requires a model");
    if (static_cast<int>(cfg.policy.size()) != model->num_states())
      throw std::invalid_argument("policy size does not match the model");
  }
  if (cfg.dynamics == SimDynamics::model) {
    if (!model)
      throw std::invalid_argument("model dynamics requires a model");
    SimReport rep = simulate_model(cfg, *model);
    finalize(rep, cfg.params);
    return rep;
  }
  SimReport rep = simulate_physical(cfg, model);
  finalize(rep, cfg.params);
  return rep;
}

double latency_seconds(const SimReport& rep, const DeviceParams& p) {
  double total = 0;
  for (const auto& rec : rep.records) {
    if (rec.sense_fail || rec.tx_fail) continue;  // failed intervals excluded
    if (rec.sense_start >= 0) total += rec.sense_start * p.delta_t;
    if (rec.tx_start >= 0)
      total += (rec.tx_start - (rec.sense_start + p.sensing_steps)) * p.delta_t;
  }
  return total;
}

ComparisonReport compare_schedulers(const SimConfig& first,
                                    const SimConfig& second,
                                    const MdpModel* model) {
  const auto same = [](const DeviceParams& a, const DeviceParams& b) {
    return a.capacitance == b.capacitance && a.v_out == b.v_out &&
           a.v_min == b.v_min && a.v_max == b.v_max && a.delta_t == b.delta_t &&
           a.subintervals == b.subintervals &&
           a.sensing_deadline == b.sensing_deadline &&
           a.sensing_steps == b.sensing_steps &&
           a.transmit_steps == b.transmit_steps &&
           a.sleep_current == b.sleep_current &&
           a.sensing_current == b.sensing_current &&
           a.transmit_current == b.transmit_current &&
           a.operating_voltage == b.operating_voltage &&
           a.grid_levels == b.grid_levels;
  };
  if (!same(first.params, second.params) ||
      first.master_seed != second.master_seed ||
      first.horizon_intervals != second.horizon_intervals ||
      first.initial_voltage != second.initial_voltage)
    throw std::invalid_argument(
        "compare: configurations must share params, harvest, horizon and seed");

  ComparisonReport out;
  out.first = simulate(first, model);
  out.second = simulate(second, model);
  out.first_kind = first.scheduler;
  out.second_kind = second.scheduler;

  const double r1 = out.first.completed_per_interval;
  const double r2 = out.second.completed_per_interval;
  out.completion_improvement_pct = r2 > 0 ? (r1 - r2) / r2 * 100.0 : 0.0;
  const double f1 = out.first.sense_failures + out.first.tx_failures;
  const double f2 = out.second.sense_failures + out.second.tx_failures;
  out.failure_reduction_pct = f2 > 0 ? (1.0 - f1 / f2) * 100.0 : 0.0;
  const double l1 = out.first.total_latency_seconds;
  const double l2 = out.second.total_latency_seconds;
  out.latency_reduction_pct = l2 > 0 ? (1.0 - l1 / l2) * 100.0 : 0.0;
  return out;
}

}  // namespace ostb
