#include "ostb/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ostb {

const char* to_string(LevelRounding r) {
  return r == LevelRounding::nearest ? "nearest" : "interpolate";
}

double voltage_after(Mode m, double v0, std::span<const double> currents,
                     const DeviceParams& p) {
  if (v0 < 0) throw std::invalid_argument("voltage_after: v0 must be >= 0");
  const double rc = p.resistance(m) * p.capacitance;
  const double beta = p.delta_t / rc;
  const long n = static_cast<long>(currents.size());
  // v = v0 e^{-n b} + R (1 - e^{-b}) sum_j i_j e^{-(n-1-j) b}; all exponents
  // are <= 0, so the sum is evaluated without large intermediates.
  double harvested = 0;
  for (long j = 0; j < n; ++j) {
    const double i = currents[j];
    if (i < 0) throw std::invalid_argument("voltage_after: negative current");
    harvested += i * std::exp(-(double)(n - 1 - j) * beta);
  }
  const double r = p.resistance(m);
  return v0 * std::exp(-(double)n * beta) + r * (1.0 - std::exp(-beta)) * harvested;
}

namespace detail {

double FinePmf::tail_at_least(double threshold) const {
  if (exact) {
    double tail = 0;
    for (size_t k = 0; k < point_v.size(); ++k)
      if (point_v[k] >= threshold) tail += point_p[k];
    return std::min(1.0, std::max(0.0, tail));
  }
  double below = 0;
  for (size_t k = 0; k < mass.size(); ++k) {
    if (mass[k] == 0) continue;
    const double cell_lo = lo + k * cell;
    const double cell_hi = cell_lo + cell;
    if (cell_hi <= threshold) {
      below += mass[k];
    } else if (cell_lo < threshold) {
      below += mass[k] * (threshold - cell_lo) / cell;
    }
  }
  return std::min(1.0, std::max(0.0, 1.0 - below));
}

FinePmf propagate_voltage(Mode m, double v0, int n_steps,
                          const std::vector<double>& atom_value,
                          const std::vector<double>& atom_prob,
                          const DeviceParams& p, int fine_cells) {
  if (n_steps < 1)
    throw std::invalid_argument("propagate_voltage: n_steps must be >= 1");
  if (fine_cells < 16)
    throw std::invalid_argument("propagate_voltage: fine_cells too small");
  const double alpha = p.decay_per_step(m);
  const double gain = p.resistance(m) * (1.0 - alpha);  // volts per amp, one step
  const size_t n_atoms = atom_value.size();

  // Exact enumeration while the product stays small; this covers one-step
  // rows and deterministic harvests exactly.
  double enumerated = 1;
  for (int s = 0; s < n_steps && enumerated <= 4096; ++s)
    enumerated *= static_cast<double>(n_atoms);
  FinePmf out;
  if (enumerated <= 4096) {
    out.exact = true;
    out.point_v = {v0};
    out.point_p = {1.0};
    std::vector<double> nv, np;
    for (int s = 0; s < n_steps; ++s) {
      nv.clear();
      np.clear();
      nv.reserve(out.point_v.size() * n_atoms);
      np.reserve(out.point_v.size() * n_atoms);
      for (size_t i = 0; i < out.point_v.size(); ++i)
        for (size_t a = 0; a < n_atoms; ++a) {
          nv.push_back(alpha * out.point_v[i] + gain * atom_value[a]);
          np.push_back(out.point_p[i] * atom_prob[a]);
        }
      out.point_v.swap(nv);
      out.point_p.swap(np);
    }
    return out;
  }

  // Reachable envelope over all intermediate steps: the lower edge decays
  // toward alpha^n v0, the upper edge moves monotonically toward R i_max.
  double i_max = 0;
  for (double a : atom_value) i_max = std::max(i_max, a);
  const double an = std::pow(alpha, n_steps);
  const double v_fix = p.resistance(m) * i_max;
  const double env_lo = an * v0;
  const double env_hi = std::max(v0, an * v0 + (1.0 - an) * v_fix);
  double span = env_hi - env_lo;
  if (span < 1e-12) span = 1e-12;
  const int cells = fine_cells;
  const double cell = span / (cells - 8);
  const double lo = env_lo - 4 * cell;

  std::vector<double> cur(cells, 0.0), next(cells, 0.0);
  // Point mass at v0, split between the two nearest cell centers.
  auto deposit = [&](std::vector<double>& dst, double v, double mass_val,
                     int& k_lo, int& k_hi) {
    double pos = (v - lo) / cell - 0.5;
    int k = static_cast<int>(std::floor(pos));
    double frac = pos - k;
    if (k < 0) {
      k = 0;
      frac = 0;
    } else if (k >= cells - 1) {
      k = cells - 2;
      frac = 1;
    }
    dst[k] += mass_val * (1.0 - frac);
    dst[k + 1] += mass_val * frac;
    k_lo = std::min(k_lo, k);
    k_hi = std::max(k_hi, k + 1);
  };

  int live_lo = cells, live_hi = -1;
  deposit(cur, v0, 1.0, live_lo, live_hi);

  std::vector<double> inc(n_atoms);
  for (size_t a = 0; a < n_atoms; ++a) inc[a] = gain * atom_value[a];

  for (int s = 0; s < n_steps; ++s) {
    int nlo = cells, nhi = -1;
    std::fill(next.begin(), next.end(), 0.0);
    for (int k = live_lo; k <= live_hi; ++k) {
      const double mk = cur[k];
      if (mk == 0) continue;
      const double base = alpha * (lo + (k + 0.5) * cell);
      for (size_t a = 0; a < n_atoms; ++a)
        deposit(next, base + inc[a], mk * atom_prob[a], nlo, nhi);
    }
    cur.swap(next);
    live_lo = nlo;
    live_hi = nhi;
  }

  out.exact = false;
  out.lo = lo;
  out.cell = cell;
  out.mass = std::move(cur);
  // Normalize away accumulated round-off.
  double total = 0;
  for (double x : out.mass) total += x;
  if (total > 0)
    for (double& x : out.mass) x /= total;
  return out;
}

std::vector<double> map_to_grid(const FinePmf& pmf, const VoltageGrid& grid,
                                LevelRounding rounding) {
  const int n = grid.size();
  std::vector<double> out(n, 0.0);
  auto add = [&](double v, double mass) {
    if (mass == 0) return;
    if (rounding == LevelRounding::nearest) {
      out[grid.nearest_level(v)] += mass;
      return;
    }
    const double h = grid.spacing();
    double pos = (v - grid.levels.front()) / h;
    if (pos <= 0) {
      out[0] += mass;
    } else if (pos >= n - 1) {
      out[n - 1] += mass;
    } else {
      const int k = static_cast<int>(std::floor(pos));
      const double frac = pos - k;
      out[k] += mass * (1.0 - frac);
      out[k + 1] += mass * frac;
    }
  };
  if (pmf.exact) {
    for (size_t k = 0; k < pmf.point_v.size(); ++k)
      add(pmf.point_v[k], pmf.point_p[k]);
  } else {
    for (size_t k = 0; k < pmf.mass.size(); ++k)
      add(pmf.lo + (k + 0.5) * pmf.cell, pmf.mass[k]);
  }
  double total = 0;
  for (double x : out) total += x;
  if (total > 0)
    for (double& x : out) x /= total;
  return out;
}

}  // namespace detail

std::vector<double> final_voltage_distribution(
    Mode m, double v0, int n_steps, const HarvestModel& harvest,
    const VoltageGrid& grid, const DeviceParams& p, int current_bins,
    LevelRounding rounding, int fine_cells) {
  if (n_steps < 1)
    throw std::invalid_argument(
        "final_voltage_distribution: n_steps must be >= 1");
  if (grid.size() < 2)
    throw std::invalid_argument("final_voltage_distribution: degenerate grid");
  harvest.validate();
  std::vector<double> av, ap;
  harvest.atoms(current_bins, av, ap);
  const auto pmf =
      detail::propagate_voltage(m, v0, n_steps, av, ap, p, fine_cells);
  return detail::map_to_grid(pmf, grid, rounding);
}

double safety_probability(Mode task_mode, double v0, const DeviceParams& p,
                          const HarvestModel& harvest, int current_bins,
                          int fine_cells) {
  if (task_mode != Mode::sense && task_mode != Mode::transmit)
    throw std::invalid_argument("safety_probability: task must be sense or transmit");
  const int n = p.task_steps(task_mode);
  std::vector<double> av, ap;
  harvest.atoms(current_bins, av, ap);
  const auto pmf =
      detail::propagate_voltage(task_mode, v0, n, av, ap, p, fine_cells);
  return pmf.tail_at_least(p.v_out);
}

}  // namespace ostb
