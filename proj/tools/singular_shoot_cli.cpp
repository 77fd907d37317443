// singular_shoot: solve / oracle / check front end.
//
// Exit codes: 0 success, 1 check found a failing diagnostic, 2 config or
// input error, 3 solver failure.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "singular_shoot/io.hpp"
#include "singular_shoot/models.hpp"
#include "singular_shoot/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sshoot;

namespace {

struct Flags {
  std::optional<int> steps, gn_max_iter;
  std::optional<double> gn_tol;
  std::optional<std::uint64_t> seed;
  std::string structure_path;
  std::string out_dir = ".";
  bool no_damping = false;
  bool check_sosc = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("singular_shoot");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SINGULAR_SHOOT_LOG");
  const std::string lvl = env ? env : "info";
  if (lvl == "error")
    spdlog::set_level(spdlog::level::err);
  else if (lvl == "debug")
    spdlog::set_level(spdlog::level::debug);
  else {
    spdlog::set_level(spdlog::level::info);
    if (lvl != "info") spdlog::warn("SINGULAR_SHOOT_LOG='{}' not recognized, using info", lvl);
  }
}

SolverConfig config_with_flags(const std::string& path, const Flags& f) {
  SolverConfig cfg = load_config(path);
  if (f.steps) {
    if (*f.steps < 4) throw ConfigError("--steps must be at least 4");
    cfg.shooting.steps = *f.steps;
  }
  if (f.gn_max_iter) cfg.gn.max_iter = *f.gn_max_iter;
  if (f.gn_tol) {
    if (!(*f.gn_tol > 0.0)) throw ConfigError("--gn-tol must be positive");
    cfg.gn.tol_residual = *f.gn_tol;
  }
  if (f.no_damping) cfg.gn.damping = Damping::None;
  if (f.seed) cfg.oracle.seed = *f.seed;
  if (!f.structure_path.empty()) cfg.structure = load_structure(f.structure_path);
  return cfg;
}

fs::path out_path(const Flags& f, const std::string& name) {
  fs::create_directories(f.out_dir);
  return fs::path(f.out_dir) / name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_solve(const std::string& config, const Flags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig cfg;
  std::optional<ProblemDef> prob;
  try {
    cfg = config_with_flags(config, f);
    prob.emplace(build_problem(cfg));
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  SolveOutcome out;
  try {
    out = solve_pipeline(*prob, cfg, [](const std::string& m) { spdlog::debug("{}", m); });
  } catch (const StageFailure& e) {
    spdlog::error("{} (after {:.2f} s)", e.what(), seconds_since(t0));
    return 3;
  }
  spdlog::info("oracle cost {:.6g}, {} phases, Gauss-Newton {} iterations", out.oracle.cost,
               out.structure.N(), out.report.iterates.size());
  try {
    write_trajectory_csv(out_path(f, "trajectory.csv").string(), *prob, out.extremal);
    write_text(out_path(f, "convergence.json").string(), convergence_json(out.report));
    ControlStructure solved = out.structure;
    solved.switch_guesses = out.nu.switches;
    write_text(out_path(f, "structure.json").string(), structure_json(solved));
    if (f.check_sosc) {
      const CheckReport rep = check_extremal(*prob, out.extremal);
      write_text(out_path(f, "coercivity.txt").string(), rep.text());
      spdlog::info("second-order report:\n{}", rep.text());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  std::string sw;
  for (double t : out.nu.switches) sw += (sw.empty() ? "" : ",") + fmt::format("{:.6f}", t);
  std::printf("status=converged iterations=%zu residual=%.3e objective=%.10g switches=[%s] time=%.2fs\n",
              out.report.iterates.size(), out.residual_inf, out.objective, sw.c_str(),
              seconds_since(t0));
  return 0;
}

int cmd_oracle(const std::string& config, const Flags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig cfg;
  std::optional<ProblemDef> prob;
  try {
    cfg = config_with_flags(config, f);
    prob.emplace(build_problem(cfg));
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  OracleResult o;
  try {
    o = direct_solve(*prob, cfg.oracle);
  } catch (const InvalidParams& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const Error& e) {
    spdlog::error("oracle failed: {} (after {:.2f} s)", e.what(), seconds_since(t0));
    return 3;
  }
  try {
    write_trajectory_csv(out_path(f, "oracle_trajectory.csv").string(), *prob, o.trajectory);
    if (prob->m() > 0) {
      const ControlStructure cs = detect_structure(o.trajectory.grid, o.trajectory.v,
                                                   prob->v_bounds(), cfg.band, cfg.min_run);
      write_text(out_path(f, "structure.json").string(), structure_json(cs));
      spdlog::info("detected {} phases", cs.N());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  std::printf("status=oracle cost=%.10g eta_violation=%.3e time=%.2fs\n", o.cost, o.eta_violation,
              seconds_since(t0));
  return 0;
}

int cmd_check(const std::string& trajectory, const std::string& config, const Flags& f) {
  std::optional<ProblemDef> prob;
  Extremal ext;
  try {
    const SolverConfig cfg = config_with_flags(config, f);
    prob.emplace(build_problem(cfg));
    ext = read_trajectory_csv(trajectory, *prob);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  const CheckReport rep = check_extremal(*prob, ext);
  std::fputs(rep.text().c_str(), stdout);
  std::printf("status=%s\n", rep.all_green() ? "green" : "flagged");
  return rep.all_green() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Indirect shooting for partially control-affine optimal control problems"};
  app.require_subcommand(1);
  Flags f;
  std::string config, trajectory;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--steps", f.steps, "RK4 steps per phase");
    sub->add_option("--gn-max-iter", f.gn_max_iter, "Gauss-Newton iteration cap");
    sub->add_option("--gn-tol", f.gn_tol, "Gauss-Newton residual tolerance");
    sub->add_flag("--no-damping", f.no_damping, "Take full Gauss-Newton steps");
    sub->add_option("--structure", f.structure_path, "Structure JSON overriding detection");
    sub->add_option("--out", f.out_dir, "Output directory");
    sub->add_option("--seed", f.seed, "Oracle seed");
  };

  CLI::App* solve = app.add_subcommand("solve", "Oracle, structure detection and shooting");
  solve->add_option("config", config, "Problem config JSON")->required();
  solve->add_flag("--check-sosc", f.check_sosc, "Also write the second-order report");
  add_common(solve);

  CLI::App* oracle = app.add_subcommand("oracle", "Direct solve and structure detection only");
  oracle->add_option("config", config, "Problem config JSON")->required();
  add_common(oracle);

  CLI::App* check = app.add_subcommand("check", "Diagnostics on a stored trajectory");
  check->add_option("trajectory", trajectory, "Trajectory CSV")->required();
  check->add_option("config", config, "Problem config JSON")->required();
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (solve->parsed()) return cmd_solve(config, f);
  if (oracle->parsed()) return cmd_oracle(config, f);
  return cmd_check(trajectory, config, f);
}
