#pragma once

#include <span>
#include <vector>

#include "singular_shoot/lie.hpp"
#include "singular_shoot/model.hpp"
#include "singular_shoot/ode.hpp"

namespace sshoot {

struct ShootingPoint {
  Vector x0, p0, beta;

  Vector pack() const;
  static ShootingPoint unpack(const ProblemDef& prob, std::span<const double> nu);
};

enum class ArcType { Lower, Singular, Upper };

/// Bang-singular structure: per phase, the arc type of each affine component.
struct ControlStructure {
  Vector switch_guesses;                     // N - 1 interior times
  std::vector<std::vector<ArcType>> phases;  // N x m

  int N() const { return static_cast<int>(phases.size()); }
  /// Throws InvalidStructure on bad shapes, identical adjacent phases or
  /// switch guesses not strictly increasing in (0, T).
  void validate(const ProblemDef& prob) const;
  /// Singular set and frozen bang values of phase k.
  ArcSpec arc(const ProblemDef& prob, int k) const;
  /// Components singular on phase k but not on phase k - 1.
  std::vector<int> entering_singular(int k) const;
  /// One phase, every component singular.
  static ControlStructure totally_singular(int m);
};

struct TPShootingPoint {
  std::vector<Vector> x0, p0;  // one per phase
  Vector switches;             // T_1 .. T_{N-1}
  Vector beta;

  /// Order: all x0, then all p0, then switches, then beta.
  Vector pack() const;
  static TPShootingPoint unpack(const ProblemDef& prob, int N, std::span<const double> nu);
};

struct ShootingOptions {
  int steps = 400;                   // RK4 steps (per phase for TP)
  double min_phase_fraction = 1e-4;  // of T
  FeedbackOptions feedback;
  std::vector<ControlGuess> guesses;  // optional, per phase
};

Vector os_residual(const ProblemDef& prob, const ShootingPoint& nu,
                   const ShootingOptions& opts = {});
Matrix os_jacobian(const ProblemDef& prob, const ShootingPoint& nu,
                   const ShootingOptions& opts = {});
/// Single-phase extremal on [0, T] with beta attached.
Extremal os_extremal(const ProblemDef& prob, const ShootingPoint& nu,
                     const ShootingOptions& opts = {});

/// d_eta + (N-1)(2n+1) + 2n + 2 * (number of entering singular components).
int tp_residual_size(const ProblemDef& prob, const ControlStructure& cs);
Vector tp_residual(const ProblemDef& prob, const ControlStructure& cs, const TPShootingPoint& nu,
                   const ShootingOptions& opts = {});
Matrix tp_jacobian(const ProblemDef& prob, const ControlStructure& cs, const TPShootingPoint& nu,
                   const ShootingOptions& opts = {});
/// Phase trajectories mapped back to [T_{k-1}, T_k] and concatenated. Switch
/// times appear twice, once as the end of phase k and once as the start of k+1.
Extremal assemble_extremal(const ProblemDef& prob, const ControlStructure& cs,
                           const TPShootingPoint& nu, const ShootingOptions& opts = {});

/// Phase boundaries 0, T_1, ..., T; throws StructureDegenerate if a phase is
/// shorter than min_phase_fraction * T.
Vector phase_bounds(const ProblemDef& prob, const Vector& switches, double min_phase_fraction);

}  // namespace sshoot
