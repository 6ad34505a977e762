#include "ostb/params.hpp"

#include <cmath>
#include <stdexcept>

namespace ostb {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::sleep: return "sleeping";
    case Mode::sense: return "sensing";
    case Mode::transmit: return "transmitting";
  }
  return "?";
}

const char* to_string(Action a) {
  switch (a) {
    case Action::sleep: return "sleeping";
    case Action::sense: return "sensing";
    case Action::transmit: return "transmitting";
  }
  return "?";
}

Mode mode_of(Action a) {
  switch (a) {
    case Action::sleep: return Mode::sleep;
    case Action::sense: return Mode::sense;
    case Action::transmit: return Mode::transmit;
  }
  throw std::invalid_argument("unknown action");
}

double DeviceParams::current_draw(Mode m) const {
  switch (m) {
    case Mode::sleep: return sleep_current;
    case Mode::sense: return sensing_current;
    case Mode::transmit: return transmit_current;
  }
  throw std::invalid_argument("unknown mode");
}

double DeviceParams::resistance(Mode m) const {
  return operating_voltage / current_draw(m);
}

double DeviceParams::decay_per_step(Mode m) const {
  return std::exp(-delta_t / (resistance(m) * capacitance));
}

int DeviceParams::task_steps(Mode m) const {
  switch (m) {
    case Mode::sense: return sensing_steps;
    case Mode::transmit: return transmit_steps;
    case Mode::sleep: return 1;
  }
  throw std::invalid_argument("unknown mode");
}

namespace {
void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

void DeviceParams::validate() const {
  require(capacitance > 0, "capacitance must be positive");
  require(delta_t > 0, "delta_t must be positive");
  require(subintervals >= 1, "subintervals must be >= 1");
  require(grid_levels >= 2, "grid_levels must be >= 2");
  require(v_min < v_max, "require v_min < v_max");
  require(v_out <= v_max, "require v_out <= v_max");
  require(v_out >= 0 && v_min >= 0, "voltages must be non-negative");
  require(sensing_steps >= 1, "sensing_steps must be >= 1");
  require(transmit_steps >= 0, "transmit_steps must be >= 0");
  require(sensing_deadline >= 0, "sensing_deadline must be >= 0");
  // Both permissible time windows must be non-empty and fit in the interval.
  require(sensing_deadline + sensing_steps <= subintervals,
          "sensing window violates sensing_deadline + sensing_steps <= subintervals");
  require(sensing_steps + transmit_steps <= subintervals,
          "transmit window violates sensing_steps + transmit_steps <= subintervals");
  require(operating_voltage > 0, "operating_voltage must be positive");
  for (Mode m : {Mode::sleep, Mode::sense, Mode::transmit}) {
    require(current_draw(m) > 0, std::string("current for mode ") +
                                     to_string(m) + " must be positive");
    require(std::isfinite(resistance(m)), "mode resistance must be finite");
  }
}

HarvestModel HarvestModel::uniform_range(double lo, double hi) {
  HarvestModel h;
  h.kind = Kind::uniform;
  h.lo = lo;
  h.hi = hi;
  h.validate();
  return h;
}

HarvestModel HarvestModel::discrete_atoms(std::vector<double> amps,
                                          std::vector<double> prob) {
  HarvestModel h;
  h.kind = Kind::discrete;
  h.support = std::move(amps);
  h.weights = std::move(prob);
  h.lo = h.hi = 0;
  h.validate();
  return h;
}

void HarvestModel::validate() const {
  if (kind == Kind::uniform) {
    require(lo >= 0, "uniform harvest requires lo >= 0");
    require(lo < hi, "uniform harvest requires lo < hi");
    return;
  }
  require(!support.empty(), "discrete harvest requires at least one atom");
  require(support.size() == weights.size(),
          "discrete harvest support/weights size mismatch");
  double total = 0;
  for (size_t i = 0; i < support.size(); ++i) {
    require(support[i] >= 0, "harvest support values must be >= 0");
    require(weights[i] >= 0, "harvest probabilities must be >= 0");
    total += weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-12,
          "discrete harvest probabilities must sum to 1");
}

double HarvestModel::max_current() const {
  if (kind == Kind::uniform) return hi;
  double m = 0;
  for (double v : support) m = std::max(m, v);
  return m;
}

double HarvestModel::mean_current() const {
  if (kind == Kind::uniform) return 0.5 * (lo + hi);
  double m = 0;
  for (size_t i = 0; i < support.size(); ++i) m += support[i] * weights[i];
  return m;
}

void HarvestModel::atoms(int bins, std::vector<double>& value,
                         std::vector<double>& prob) const {
  value.clear();
  prob.clear();
  if (kind == Kind::discrete) {
    value = support;
    prob = weights;
    return;
  }
  if (bins < 2) throw std::invalid_argument("current_bins must be >= 2");
  const double width = (hi - lo) / bins;
  value.reserve(bins);
  prob.reserve(bins);
  for (int k = 0; k < bins; ++k) {
    value.push_back(lo + (k + 0.5) * width);
    prob.push_back(1.0 / bins);
  }
}

double HarvestModel::sample(double u) const {
  if (kind == Kind::uniform) return lo + u * (hi - lo);
  double acc = 0;
  for (size_t i = 0; i < support.size(); ++i) {
    acc += weights[i];
    if (u < acc) return support[i];
  }
  return support.back();
}

VoltageGrid VoltageGrid::make(const DeviceParams& p) {
  p.validate();
  VoltageGrid g;
  g.levels.resize(p.grid_levels);
  const double h = (p.v_max - p.v_min) / (p.grid_levels - 1);
  for (int k = 0; k < p.grid_levels; ++k) g.levels[k] = p.v_min + k * h;
  g.levels.front() = p.v_min;  // endpoints exact
  g.levels.back() = p.v_max;
  return g;
}

int VoltageGrid::nearest_level(double v) const {
  const int n = size();
  if (v <= levels.front()) return 0;
  if (v >= levels.back()) return n - 1;
  const double h = spacing();
  int k = static_cast<int>(std::floor((v - levels.front()) / h + 0.5));
  if (k < 0) k = 0;
  if (k > n - 1) k = n - 1;
  // Settle the knife edge exactly: nearest wins, midpoint ties go up.
  for (int c = k - 1; c <= k + 1; ++c) {
    if (c < 0 || c + 1 >= n) continue;
    const double d_lo = v - levels[c];
    const double d_hi = levels[c + 1] - v;
    if (d_lo < 0 || d_hi < 0) continue;
    return d_hi <= d_lo ? c + 1 : c;
  }
  return k;
}

}  // namespace ostb
