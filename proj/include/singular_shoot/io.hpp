#pragma once

// Problem configs, trajectory CSV, structure and convergence JSON.

#include <map>
#include <optional>
#include <string>

#include "singular_shoot/gauss_newton.hpp"
#include "singular_shoot/model.hpp"
#include "singular_shoot/oracle.hpp"
#include "singular_shoot/shooting.hpp"

namespace sshoot {

struct SolverConfig {
  std::string model;
  std::map<std::string, double> params;
  OracleOptions oracle;
  double band = 0.05;
  int min_run = 3;
  ShootingOptions shooting;
  GNOptions gn;
  std::optional<ControlStructure> structure;
};

/// Throws ConfigError naming the path on a missing file or a schema error.
SolverConfig load_config(const std::string& path);
SolverConfig parse_config(const std::string& json_text, const std::string& label = "<string>");
/// Builds the registered model; InvalidParams becomes ConfigError.
ProblemDef build_problem(const SolverConfig& cfg);

/// Header t,x1..xn,p1..pn,u1..ul,v1..vm,phase; one row per node.
void write_trajectory_csv(const std::string& path, const ProblemDef& prob, const Extremal& ext);
std::string trajectory_csv(const ProblemDef& prob, const Extremal& ext);
/// Arc types are inferred per phase from the stored v (bang when every node
/// sits on the same bound). beta is left empty. Throws ConfigError on
/// malformed input.
Extremal read_trajectory_csv(const std::string& path, const ProblemDef& prob);
Extremal parse_trajectory_csv(const std::string& text, const ProblemDef& prob);

/// {"phases": [["upper"], ...], "switches": [...]}
std::string structure_json(const ControlStructure& cs);
ControlStructure parse_structure_json(const std::string& text);
ControlStructure load_structure(const std::string& path);

/// Array of {iter, residual_norm, step_norm}.
std::string convergence_json(const GNReport& rep);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace sshoot
