#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ostb/mdp.hpp"
#include "ostb/simplex.hpp"

namespace ostb {

/// Long-run state-action frequencies solving the average-reward linear
/// program: maximize sum x(s,a) r(s,a) over x >= 0 with sum x = 1 and
/// per-state flow balance. Aligned with MdpModel::kernel.
struct OccupationMeasure {
  std::vector<std::vector<double>> x;
  double objective = 0;          // sum of x(s,a) r(s,a)
  long lp_iterations = 0;
  double total_mass = 0;         // diagnostics; 1 up to round-off
  double max_flow_residual = 0;  // worst per-state balance violation
};

/// Side of the dual-route check that is independent of the LP: value
/// iteration on the half-lazy transform of the chain, which removes the
/// periodicity of the local clock without changing gain or optimal actions.
struct RviResult {
  double gain = 0;
  std::vector<double> bias;      // original-chain scale
  std::vector<Action> greedy;
  long iterations = 0;
  double span = 0;
};

struct UnichainReport {
  int closed_classes = 0;
  int recurrent_states = 0;
  int transient_states = 0;
  bool reset_superstate_recurrent = false;  // (tau=0, f=0) intersects a closed class
  std::vector<char> state_recurrent;
  std::vector<int> closed_class_sizes;
};

/// Lowest level (0-based) that triggers the task per window slot; nullopt
/// when no level does ("never").
struct ThresholdTables {
  std::vector<std::optional<int>> sense;     // tau = 0 .. sensing_deadline
  std::vector<std::optional<int>> transmit;  // tau = n_s .. M - n_t
};

struct GainReport {
  double gain_per_epoch = 0;
  double expected_reward_per_interval = 0;
  double expected_tasks_per_interval = 0;  // safety-weighted completions
  double reset_visit_probability = 0;      // stationary mass of (tau=0, f=0)
  std::vector<double> stationary;          // full length; zero on transients
};

class ThresholdStructureError : public std::runtime_error {
 public:
  ThresholdStructureError(std::string msg, int tau, int flag,
                          std::string pattern)
      : std::runtime_error(std::move(msg)),
        tau(tau),
        flag(flag),
        pattern(std::move(pattern)) {}
  int tau;
  int flag;
  std::string pattern;  // per-level action pattern, '.' sleep, 'x' task
};

/// Solves the occupation-measure LP. Single-action states are eliminated
/// beforehand by flow substitution (their occupation is implied by the
/// decidable states feeding them), which shrinks the program several-fold;
/// the returned measure is always expanded back to the full state space.
OccupationMeasure solve_occupation_lp(const MdpModel& model,
                                      const LpOptions& lp_options = {});

RviResult relative_value_iteration(const MdpModel& model, double tol = 1e-10,
                                   long max_iters = 1000000);

/// Advantage of the task action over sleeping in a two-action state, from the
/// one-step Bellman form with the given bias values.
double advantage(const MdpModel& model, const std::vector<double>& bias,
                 int state);

/// Deterministic policy from the occupation measure: the action carrying
/// occupation mass > tol wins; when both actions carry mass the task action
/// is preferred; states with no mass (transient under every optimal
/// behavior) fall back to the greedy advantage rule with the RVI bias.
std::vector<Action> extract_policy(const MdpModel& model,
                                   const OccupationMeasure& occupation,
                                   const RviResult& rvi, double tol = 1e-9);

/// Threshold tables of a policy; throws ThresholdStructureError when some
/// decidable superstate is not a step function of the voltage level.
ThresholdTables extract_thresholds(const MdpModel& model,
                                   const std::vector<Action>& policy);

std::vector<SparseRow> induced_chain(const MdpModel& model,
                                     const std::vector<Action>& policy);

UnichainReport verify_unichain(const MdpModel& model,
                               const std::vector<Action>& policy);

/// Stationary-distribution quantities of the induced chain; requires exactly
/// one closed recurrent class.
GainReport make_gain_report(const MdpModel& model,
                            const std::vector<Action>& policy);

}  // namespace ostb
