#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ostb/config.hpp"
#include "ostb/serialize.hpp"
#include "ostb/sim.hpp"
#include "ostb/solver.hpp"

namespace ostb {

class VerificationError : public std::runtime_error {
 public:
  explicit VerificationError(const std::string& msg)
      : std::runtime_error(msg) {}
};

class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& msg) : std::runtime_error(msg) {}
};

MdpModel build_model(const RunConfig& cfg);

struct SolveOutput {
  MdpModel model;
  OccupationMeasure occupation;
  RviResult rvi;
  PolicyArtifact policy;
  GainReport gain;          // valid when gain_available
  bool gain_available = false;
};

/// build + LP + RVI + extraction + recurrence analysis in one pass.
SolveOutput solve_model(const RunConfig& cfg);
SolveOutput solve_model_with(MdpModel model, const RunConfig& cfg);

SimConfig make_sim_config(const RunConfig& cfg, SchedulerKind kind,
                          std::vector<Action> policy = {});

struct CommandResult {
  std::vector<std::string> written;
};

CommandResult cmd_build(const RunConfig& cfg, std::string out_dir);
CommandResult cmd_solve(const RunConfig& cfg, std::string out_dir);
CommandResult cmd_simulate(const RunConfig& cfg, const std::string& policy_path,
                           std::string out_dir, SchedulerKind scheduler);
CommandResult cmd_compare(const RunConfig& cfg, std::string out_dir);
/// Structural checks: one closed recurrent class containing the reset
/// superstate, threshold-shaped optimal policy, LP and RVI gains within
/// 1e-6 relative. Throws VerificationError when any fails.
CommandResult cmd_verify(const RunConfig& cfg, std::string out_dir);

/// Named reproduction recipes (fig3..fig6, tab2, tab3, combined, abstract).
/// Each pins the parameter set it needs on top of the given base config and
/// emits plot-ready CSV/JSON.
CommandResult cmd_sweep(const RunConfig& base, const std::string& recipe,
                        std::string out_dir, int threads = 1);

std::vector<std::string> recipe_names();

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results are joined
/// in index order so output files are deterministic.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace ostb
