#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ostb/pipeline.hpp"

namespace {

// Exit codes: 0 ok, 2 config error, 3 solver failure, 4 verification failure.
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::string format;
  long seed = -1;
  int threads = 1;
};

ostb::RunConfig load(const GlobalArgs& g) {
  ostb::RunConfig cfg = g.config_path.empty()
                            ? ostb::parse_run_config_text(
                                  R"({"harvest": {"kind":"uniform","lo":0,"hi":3e-3}})")
                            : ostb::load_run_config(g.config_path);
  if (g.seed >= 0) cfg.sim.seed = static_cast<std::uint64_t>(g.seed);
  if (!g.format.empty()) {
    cfg.output.csv = g.format.find("csv") != std::string::npos;
    cfg.output.json = g.format.find("json") != std::string::npos;
    if (!cfg.output.csv && !cfg.output.json)
      throw ostb::ConfigError("--format expects csv, json or csv,json");
  }
  return cfg;
}

void print_written(const ostb::CommandResult& res) {
  for (const auto& p : res.written) std::printf("wrote %s\n", p.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold scheduling for capacitor-powered sensing devices: "
               "build the average-reward MDP, solve for the optimal "
               "stationary threshold policy, and evaluate it against ALAP "
               "in a seeded device simulator."};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "run configuration (JSON)");
  app.add_option("--out", g.out_dir, "output directory (default from config)");
  app.add_option("--seed", g.seed, "override sim.seed");
  app.add_option("--format", g.format, "output formats: csv,json");
  app.add_option("--threads", g.threads, "worker threads for sweeps");

  auto* c_build = app.add_subcommand("build", "build and serialize the MDP");
  auto* c_solve = app.add_subcommand(
      "solve", "solve the occupation-measure LP and write the policy");
  auto* c_sim = app.add_subcommand("simulate", "run the device simulator");
  std::string policy_path, scheduler_name = "ostb";
  c_sim->add_option("--policy", policy_path,
                    "policy artifact (required for the ostb scheduler)");
  c_sim->add_option("--scheduler", scheduler_name, "ostb | alap | asap");
  auto* c_cmp = app.add_subcommand(
      "compare", "solve, then run OSTB and ALAP on shared seeds");
  auto* c_sweep = app.add_subcommand("sweep", "run a reproduction recipe");
  std::string recipe;
  c_sweep->add_option("--recipe", recipe, "fig3|fig4|fig5|fig6|tab2|tab3|combined|abstract")
      ->required();
  auto* c_verify = app.add_subcommand(
      "verify", "structural checks: recurrence, thresholds, LP vs RVI");

  CLI11_PARSE(app, argc, argv);

  try {
    const ostb::RunConfig cfg = load(g);
    if (c_build->parsed()) {
      print_written(ostb::cmd_build(cfg, g.out_dir));
    } else if (c_solve->parsed()) {
      print_written(ostb::cmd_solve(cfg, g.out_dir));
    } else if (c_sim->parsed()) {
      ostb::SchedulerKind kind;
      if (scheduler_name == "ostb")
        kind = ostb::SchedulerKind::ostb;
      else if (scheduler_name == "alap")
        kind = ostb::SchedulerKind::alap;
      else if (scheduler_name == "asap")
        kind = ostb::SchedulerKind::asap;
      else
        throw ostb::ConfigError("unknown scheduler '" + scheduler_name + "'");
      if (kind == ostb::SchedulerKind::ostb && policy_path.empty())
        throw ostb::ConfigError("simulate --scheduler ostb needs --policy");
      print_written(ostb::cmd_simulate(cfg, policy_path, g.out_dir, kind));
    } else if (c_cmp->parsed()) {
      print_written(ostb::cmd_compare(cfg, g.out_dir));
    } else if (c_sweep->parsed()) {
      print_written(ostb::cmd_sweep(cfg, recipe, g.out_dir, g.threads));
    } else if (c_verify->parsed()) {
      print_written(ostb::cmd_verify(cfg, g.out_dir));
    }
  } catch (const ostb::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ostb::VerificationError& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return kExitVerify;
  } catch (const ostb::SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return 0;
}
