#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ostb/params.hpp"

namespace ostb::test {

/// Reference device constants used throughout the tests.
inline DeviceParams reference_params() {
  DeviceParams p;  // defaults are already the reference set
  return p;
}

/// Reference configuration with the operating point pinned for reproduction
/// runs (see README): load resistances anchored at the minimum operating
/// voltage.
inline DeviceParams reproduction_params() {
  DeviceParams p = reference_params();
  p.operating_voltage = 1.8;
  return p;
}

/// A deliberately fat-harvest, fast-discharging configuration whose micro
/// matrices are strictly positive: every level reaches every level in one
/// sleep step. Used where structural theorems assume positive kernels.
inline DeviceParams fat_params() {
  DeviceParams p;
  p.capacitance = 1e-5;
  p.v_out = 1.8;
  p.v_min = 1.8;
  p.v_max = 3.3;
  p.delta_t = 0.02;
  p.subintervals = 8;
  p.sensing_deadline = 3;
  p.sensing_steps = 3;
  p.transmit_steps = 0;  // sensing-only
  p.sleep_current = 1.2e-3;
  p.sensing_current = 2.0e-3;
  p.transmit_current = 3.0e-3;
  p.operating_voltage = 3.3;
  p.grid_levels = 3;
  return p;
}

inline double uniform01(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

}  // namespace ostb::test
