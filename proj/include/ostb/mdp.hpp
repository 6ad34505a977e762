#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ostb/energy.hpp"
#include "ostb/markov.hpp"
#include "ostb/params.hpp"

namespace ostb {

/// One admissible system state: voltage level (0-based), local clock tau and
/// task flag f (0 = sensing pending, 1 = transmit pending, 2 = both done).
struct State {
  int level = 0;
  int tau = 0;
  int flag = 0;
};

/// A (tau, flag) pair; groups the grid_levels states sharing it.
struct SuperState {
  int tau = 0;
  int flag = 0;
};

/// Canonical enumeration of the admissible states: flag-major, then tau, then
/// voltage level. Admissible clocks per flag: f=0 has tau in [0, M-1], f=1 in
/// [n_s, M-1], f=2 in [n_s+n_t, M-1]. With transmit_steps == 0 the f=2 (and
/// transmit) side is absent entirely.
struct StateSpace {
  DeviceParams params;
  std::vector<State> states;
  std::vector<SuperState> superstates;   // same ordering, one per (tau, flag)
  std::vector<int> super_of_state;       // state index -> superstate index
  std::vector<int> super_first_state;    // superstate index -> first state
  std::array<std::vector<int>, 3> super_by_flag_tau;  // [flag][tau] -> super or -1

  int num_states() const { return static_cast<int>(states.size()); }
  int num_superstates() const { return static_cast<int>(superstates.size()); }
  int state_index(int level, int tau, int flag) const;
  int superstate_index(int tau, int flag) const;  // -1 when inadmissible
};

StateSpace build_state_space(const DeviceParams& params);

/// Allowable actions of a state. S1 (tau <= d_s, f=0) may sense, S2
/// (n_s <= tau <= M-n_t, f=1) may transmit, everything else only sleeps.
std::vector<Action> allowed_actions(const DeviceParams& params, const State& s);

/// Voltage-level kernels: one sleeping sub-interval, one full sensing task,
/// one full transmitting task. Rows are start levels.
struct MicroMatrices {
  Matrix sleep, sense, transmit;
};

struct MicroBuild {
  MicroMatrices matrices;
  std::vector<double> safe_sense;     // safety probability per start level
  std::vector<double> safe_transmit;  // empty when the task is disabled
};

MicroBuild build_micro_matrices(const DeviceParams& params,
                                const HarvestModel& harvest,
                                const VoltageGrid& grid, int current_bins,
                                LevelRounding rounding, int fine_cells = 4096,
                                double smoothing_epsilon = 0.0);

struct RewardSpec {
  enum class Kind { basic, sigmoid };
  Kind kind = Kind::basic;
  double beta = 15.0;
  double theta = 0.95;
};

struct ActionEntry {
  Action action = Action::sleep;
  double reward = 0.0;
  SparseRow next;  // distribution over state indices
};

/// The finite average-reward MDP: admissible states, per-state allowable
/// actions with transition rows and rewards, plus everything needed to
/// rebuild or audit it.
struct MdpModel {
  DeviceParams params;
  HarvestModel harvest;
  VoltageGrid grid;
  RewardSpec reward;
  LevelRounding rounding = LevelRounding::nearest;
  int current_bins = 256;
  int fine_cells = 4096;
  double smoothing_epsilon = 0.0;

  StateSpace space;
  MicroMatrices micro;
  std::vector<double> safe_sense, safe_transmit;
  std::vector<std::vector<ActionEntry>> kernel;  // per state; sleep entry first

  int num_states() const { return space.num_states(); }
  bool decidable(int state) const { return kernel[state].size() > 1; }
  const ActionEntry* entry(int state, Action a) const;
  /// Reward of (state, action); throws when the action is not allowed.
  double reward_value(int state, Action a) const;
};

/// Transition rows for every admissible (state, action) pair, following the
/// superstate rules: sleeping advances tau by one (wrapping to (0,0) from
/// tau = M-1), sensing jumps to (tau+n_s, 1), transmitting to (tau+n_t, 2),
/// and a task that ends exactly at the interval boundary wraps to (0,0).
std::vector<std::vector<ActionEntry>> assemble_transition_kernel(
    const StateSpace& space, const MicroMatrices& micro);

/// Fills in rewards: safety probability of the started task (basic) or its
/// normalized sigmoid transform; sleeping always earns 0.
void apply_rewards(const StateSpace& space, const RewardSpec& reward,
                   const std::vector<double>& safe_sense,
                   const std::vector<double>& safe_transmit,
                   std::vector<std::vector<ActionEntry>>& kernel);

double sigmoid_reward(double p_safe, double p_safe_at_vmax, double beta,
                      double theta);

struct MdpBuildOptions {
  int current_bins = 256;
  int fine_cells = 4096;
  LevelRounding rounding = LevelRounding::nearest;
  double smoothing_epsilon = 0.0;
};

MdpModel build_mdp(const DeviceParams& params, const HarvestModel& harvest,
                   const RewardSpec& reward, const MdpBuildOptions& opt = {});

}  // namespace ostb
