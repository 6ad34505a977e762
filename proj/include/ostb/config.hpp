#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ostb/energy.hpp"
#include "ostb/mdp.hpp"
#include "ostb/params.hpp"
#include "ostb/sim.hpp"

namespace ostb {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// One run configuration: device constants, harvest law, reward shape,
/// solver knobs and simulation setup. Parsed from a JSON document with
/// unknown keys rejected.
struct RunConfig {
  DeviceParams device;
  HarvestModel harvest;
  RewardSpec reward;

  struct Solver {
    int current_bins = 256;
    int fine_cells = 4096;
    double smoothing_epsilon = 0.0;
    LevelRounding rounding = LevelRounding::interpolate;
    double lp_cost_tol = 1e-9;
    double rvi_tol = 1e-10;
    long rvi_max_iters = 1000000;
  } solver;

  struct Sim {
    double horizon_seconds = 2000;
    std::uint64_t seed = 1;
    double initial_voltage = -1;  // -1 means v_max
    SimDynamics dynamics = SimDynamics::physical;
  } sim;

  struct Output {
    std::string dir = "out";
    bool csv = true;
    bool json = true;
  } output;

  int horizon_intervals() const;
  void validate() const;
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);  // canonical form

/// FNV-1a hash of the canonical JSON form; embedded in every artifact so
/// downstream commands can detect mismatched inputs.
std::string config_hash(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

struct ManifestEntry {
  std::string path;
  std::uint64_t bytes = 0;
  std::string hash;
};

struct Manifest {
  std::string tool_version;
  std::string command;
  std::string created_at;  // the only timestamp in any artifact
  std::string config_hash;
  std::vector<std::string> inputs;
  std::vector<ManifestEntry> outputs;
};

extern const char* const kToolVersion;

/// Writes `text` to `path` and records it in the manifest.
void write_artifact(Manifest& manifest, const std::string& path,
                    const std::string& text);
void write_manifest(const Manifest& manifest, const std::string& path);

}  // namespace ostb
