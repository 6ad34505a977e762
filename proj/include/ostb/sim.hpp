#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ostb/mdp.hpp"
#include "ostb/params.hpp"

namespace ostb {

enum class SchedulerKind { ostb, alap, asap };

const char* to_string(SchedulerKind k);

/// What the scheduler drives: the continuous-voltage device physics, or the
/// quantized chain of the MDP itself (used for solver cross-validation).
enum class SimDynamics { physical, model };

struct SimConfig {
  DeviceParams params;
  HarvestModel harvest;
  SchedulerKind scheduler = SchedulerKind::alap;
  std::vector<Action> policy;  // required for SchedulerKind::ostb
  int horizon_intervals = 2000;
  std::uint64_t master_seed = 1;
  double initial_voltage = -1;  // < 0 means v_max
  SimDynamics dynamics = SimDynamics::physical;
};

struct IntervalRecord {
  int sense_start = -1;  // tau where the task started, -1 when skipped
  int tx_start = -1;
  bool sense_done = false;
  bool tx_done = false;
  bool sense_fail = false;  // power failure during execution
  bool tx_fail = false;
  double v_end = 0;  // continuous voltage at the end of the interval
};

struct SimReport {
  int intervals = 0;
  long sense_completed = 0, tx_completed = 0;
  long sense_failures = 0, tx_failures = 0;
  long sense_skipped = 0, tx_skipped = 0;
  double completed_per_interval = 0;  // mean of xi_s (1 + xi_t)
  double total_latency_seconds = 0;
  double max_voltage_seen = 0;
  std::vector<IntervalRecord> records;
};

/// ALAP timing rule: sleep until the last slot of each window, then start the
/// task unconditionally.
Action alap_decide(int tau, int flag, const DeviceParams& p);

/// ASAP rule: start each task at the first slot of its window.
Action asap_decide(int tau, int flag, const DeviceParams& p);

/// Seeded Monte-Carlo run. Deterministic for a fixed (config, master_seed):
/// every main interval draws from its own RNG stream derived from the master
/// seed and the interval index, so results do not depend on how the horizon
/// is chunked across workers.
///
/// The OSTB scheduler decides on the quantized state (same quantizer as the
/// MDP); the voltage itself stays continuous. A device below v_out is off and
/// cannot start a task; a task whose voltage falls below v_out at a
/// sub-interval boundary is aborted, the load is detached for the rest of the
/// interval (harvest-only charging, clamped at v_max) and the interval is
/// counted as failed for that task.
SimReport simulate(const SimConfig& config,
                   const MdpModel* model = nullptr);

/// Sum over failure-free intervals of the gap between desired and actual
/// start times: sensing is desired at tau=0, transmitting immediately after
/// sensing completes. Skipped tasks contribute nothing.
double latency_seconds(const SimReport& report, const DeviceParams& p);

struct ComparisonReport {
  SimReport first, second;
  SchedulerKind first_kind, second_kind;
  double completion_improvement_pct = 0;  // first vs second
  double failure_reduction_pct = 0;
  double latency_reduction_pct = 0;
};

/// Runs the two schedulers on identical physics (same params, harvest and
/// seed) and reports paired metrics. Throws when the configs disagree on
/// anything but the scheduler.
ComparisonReport compare_schedulers(const SimConfig& first,
                                    const SimConfig& second,
                                    const MdpModel* model = nullptr);

/// Deterministic per-interval substream derivation.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream);

}  // namespace ostb
