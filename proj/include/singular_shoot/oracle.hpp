#pragma once

#include <cstdint>
#include <vector>

#include "singular_shoot/model.hpp"
#include "singular_shoot/shooting.hpp"

namespace sshoot {

struct OracleOptions {
  int grid_N = 200;           // control intervals
  int iters = 400;            // projected-gradient iterations per penalty loop
  int outer_loops = 5;        // penalty weights 1, 10, 100, ...
  double initial_weight = 1.0;
  int substeps = 1;           // RK4 steps per control interval
  std::uint64_t seed = 0;     // perturbs the initial controls
};

struct OracleResult {
  /// Nodes 0..N; node k carries the control of interval k (the last node
  /// repeats interval N-1). p holds the discrete adjoint.
  Extremal trajectory;
  double cost = 0.0;                 // phi at the final iterate
  double eta_violation = 0.0;        // max |eta| over penalized rows
  std::vector<double> loop_costs;    // phi after each penalty loop
  std::vector<int> eliminated_rows;  // eta rows fixing initial states exactly
};

/// Piecewise-constant controls, RK4 rollout, quadratic penalty on eta rows
/// that are not simple initial-state fixes, and a spectral projected gradient
/// inner loop with a nonmonotone line search. Throws InvalidParams on
/// infinite control bounds or grid_N < 1, Diverged on a non-finite cost.
OracleResult direct_solve(const ProblemDef& prob, const OracleOptions& opts = {});

/// Classifies each node of a v trajectory against `bounds` with a relative
/// band, merges runs shorter than min_run nodes and puts switches at the first
/// node of each new run. Throws NoStructure when there are no affine controls
/// or no nodes.
ControlStructure detect_structure(const std::vector<double>& grid,
                                  const std::vector<Vector>& v_trajectory,
                                  const std::vector<Bounds>& bounds, double band = 0.05,
                                  int min_run = 3);

/// Shooting unknowns read off an oracle trajectory at the phase starts, with
/// per-phase control guesses for the feedback solve.
TPShootingPoint tp_guess_from_oracle(const ProblemDef& prob, const ControlStructure& cs,
                                     const OracleResult& oracle,
                                     std::vector<ControlGuess>* guesses = nullptr);

/// phi(x(0), x(T)) of an extremal.
double objective(const ProblemDef& prob, const Extremal& ext);

}  // namespace sshoot
