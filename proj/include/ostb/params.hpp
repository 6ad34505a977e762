#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ostb {

// Device operating modes. Sensing and transmitting are the two tasks; sleeping
// is the idle mode in between.
enum class Mode { sleep, sense, transmit };

enum class Action { sleep = 0, sense = 1, transmit = 2 };

const char* to_string(Mode m);
const char* to_string(Action a);
Mode mode_of(Action a);

/// Physical and timing constants of the battery-less device.
///
/// A main interval consists of `subintervals` sub-intervals of `delta_t`
/// seconds and holds at most one sensing task followed by one transmitting
/// task. Sensing may start at any local clock tau in [0, sensing_deadline];
/// transmitting at tau in [sensing_steps, subintervals - transmit_steps].
/// Each mode i draws a fixed nominal current I_i, modeled as a load
/// resistance R_i = operating_voltage / I_i across the capacitor.
struct DeviceParams {
  double capacitance = 4.7e-3;     // farads
  double v_out = 1.8;              // turn-off threshold, volts
  double v_min = 1.8;              // lowest grid voltage, volts
  double v_max = 3.3;              // highest grid voltage, volts
  double delta_t = 0.02;           // sub-interval length, seconds
  int subintervals = 50;           // M, sub-intervals per main interval
  int sensing_deadline = 15;       // d_s, last sub-interval where sensing may start
  int sensing_steps = 5;           // n_s, sensing duration in sub-intervals
  int transmit_steps = 20;         // n_t, transmit duration; 0 disables the task
  double sleep_current = 0.1e-3;   // amps
  double sensing_current = 1.7e-3; // amps
  double transmit_current = 4.36e-3; // amps
  double operating_voltage = 3.3;  // E in R_i = E / I_i
  int grid_levels = 30;            // N_v

  double current_draw(Mode m) const;
  double resistance(Mode m) const;      // E / I_m
  double decay_per_step(Mode m) const;  // exp(-delta_t / (R_m C))
  int task_steps(Mode m) const;         // duration of a task mode, sub-intervals
  bool has_transmit_task() const { return transmit_steps > 0; }
  double interval_seconds() const { return subintervals * delta_t; }

  /// Throws std::invalid_argument when any constraint fails, e.g. an empty
  /// permissible time window or a non-positive mode resistance.
  void validate() const;
};

/// I.i.d. per-sub-interval harvested-current law.
struct HarvestModel {
  enum class Kind { uniform, discrete };
  Kind kind = Kind::uniform;
  double lo = 0.0, hi = 3e-3;          // uniform support, amps
  std::vector<double> support;         // discrete atom values, amps
  std::vector<double> weights;         // discrete atom probabilities

  static HarvestModel uniform_range(double lo, double hi);
  static HarvestModel discrete_atoms(std::vector<double> amps,
                                     std::vector<double> prob);

  void validate() const;
  double max_current() const;
  double mean_current() const;

  /// Discretization used by the convolution machinery. Uniform laws become
  /// `bins` equal-width atoms at bin midpoints, each with mass 1/bins;
  /// discrete laws are returned as-is (bins ignored).
  void atoms(int bins, std::vector<double>& value,
             std::vector<double>& prob) const;

  /// Maps u in [0,1) to a current draw (inverse CDF).
  double sample(double u) const;
};

/// Uniformly spaced quantization grid over [v_min, v_max].
struct VoltageGrid {
  std::vector<double> levels;

  static VoltageGrid make(const DeviceParams& p);

  int size() const { return static_cast<int>(levels.size()); }
  double spacing() const { return levels[1] - levels[0]; }

  /// Nearest grid level, 0-based. Values below the grid map to 0, above to
  /// size()-1; exact midpoints round to the higher level. Serialized
  /// artifacts report levels 1-based.
  int nearest_level(double v) const;
};

}  // namespace ostb
