#pragma once

#include <span>
#include <vector>

#include "ostb/params.hpp"

namespace ostb {

/// How probability mass on a continuous voltage is mapped onto grid levels.
///
/// `nearest` sends all mass to the closest level. `interpolate` splits mass
/// between the two bracketing levels in proportion to proximity, which keeps
/// the expected voltage drift of the quantized chain equal to the physical
/// drift even when one step moves the voltage by less than half a level.
enum class LevelRounding { nearest, interpolate };

const char* to_string(LevelRounding r);

/// Capacitor voltage after running mode `m` for currents.size() sub-intervals
/// starting from v0, with the harvested current of each sub-interval given.
/// The result is not clamped.
double voltage_after(Mode m, double v0, std::span<const double> currents,
                     const DeviceParams& p);

/// Distribution of the voltage grid level reached after `n_steps`
/// sub-intervals in mode `m`, starting from v0, under the i.i.d. harvest law.
///
/// Continuous harvest laws are discretized into `current_bins` atoms; the
/// weighted-sum structure of the voltage recursion is then propagated by
/// sequential convolution on a fine internal grid of `fine_cells` cells, and
/// the final voltage is mapped onto the grid (clamped to [v_min, v_max]).
/// The returned vector sums to 1.
std::vector<double> final_voltage_distribution(
    Mode m, double v0, int n_steps, const HarvestModel& harvest,
    const VoltageGrid& grid, const DeviceParams& p, int current_bins = 256,
    LevelRounding rounding = LevelRounding::nearest, int fine_cells = 4096);

/// P(final voltage >= v_out) after running the full task `task_mode`
/// (Mode::sense or Mode::transmit) from v0. Same convolution machinery as
/// final_voltage_distribution, but the threshold is applied to the continuous
/// final-voltage law, without grid quantization.
double safety_probability(Mode task_mode, double v0, const DeviceParams& p,
                          const HarvestModel& harvest, int current_bins = 256,
                          int fine_cells = 4096);

namespace detail {

/// Fine-grained final-voltage law used by both public operations. Either an
/// exact atom list (small discrete cases) or a histogram with uniform mass
/// inside each cell.
struct FinePmf {
  bool exact = false;
  std::vector<double> point_v, point_p;  // exact representation
  double lo = 0, cell = 0;               // histogram representation
  std::vector<double> mass;

  double tail_at_least(double threshold) const;  // P(V >= threshold)
};

FinePmf propagate_voltage(Mode m, double v0, int n_steps,
                          const std::vector<double>& atom_value,
                          const std::vector<double>& atom_prob,
                          const DeviceParams& p, int fine_cells);

std::vector<double> map_to_grid(const FinePmf& pmf, const VoltageGrid& grid,
                                LevelRounding rounding);

}  // namespace detail

}  // namespace ostb
