#pragma once

#include <string>

#include "ostb/config.hpp"
#include "ostb/mdp.hpp"
#include "ostb/sim.hpp"
#include "ostb/solver.hpp"

namespace ostb {

/// Versioned JSON view of a built model: states, sparse transition kernel in
/// coordinate-list form, rewards and micro matrices. Levels and state indices
/// are 1-based in the serialized form.
std::string model_to_json(const MdpModel& model, const std::string& cfg_hash);

struct PolicyArtifact {
  std::vector<Action> action;
  ThresholdTables thresholds;
  double gain = 0;                 // induced-chain gain of the policy
  double lp_objective = 0;
  double rvi_gain = 0;
  double expected_tasks_per_interval = 0;
  UnichainReport unichain;
  std::string config_hash;
};

std::string policy_to_json(const MdpModel& model, const PolicyArtifact& art);

/// Reads back the state->action table of a policy artifact and checks its
/// config hash against `expected_hash` (pass empty to skip).
PolicyArtifact policy_from_json(const std::string& text,
                                const std::string& expected_hash);

std::string unichain_report_to_json(const MdpModel& model,
                                    const UnichainReport& rep);

std::string sim_report_to_json(const SimReport& rep, SchedulerKind kind,
                               const std::string& cfg_hash);
std::string sim_report_to_csv(const SimReport& rep);

std::string comparison_to_json(const ComparisonReport& rep,
                               const std::string& cfg_hash);

}  // namespace ostb
