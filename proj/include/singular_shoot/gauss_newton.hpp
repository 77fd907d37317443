#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "singular_shoot/linalg.hpp"

namespace sshoot {

enum class Damping { None, Armijo };
enum class GNStatus { Converged, MaxIter, SingularJacobian, LineSearchFail };

std::string to_string(GNStatus s);

struct GNOptions {
  int max_iter = 100;
  double tol_residual = 1e-10;
  double tol_step = 1e-12;  // relative to 1 + |nu|
  Damping damping = Damping::Armijo;
  double armijo_c = 1e-4;
  int max_halvings = 30;
};

struct GNReport {
  std::vector<Vector> iterates;  // nu_0, nu_1, ...
  Vector residual_norms;         // |S(nu_k)|_2
  Vector step_norms;             // |nu_k - nu_{k-1}|_2, 0 for k = 0
  GNStatus status = GNStatus::MaxIter;
  std::optional<double> order_estimate;
  std::string message;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

struct GNResult {
  Vector nu;
  GNReport report;
};

/// Throws InvalidParams for non-positive tolerances. A trial point where the
/// residual throws sshoot::Error counts as a failed line-search trial.
GNResult gn_solve(const ResidualFn& residual, const JacobianFn& jacobian, const Vector& nu0,
                  const GNOptions& opts = {});

/// Slope of log e_{k+1} against log e_k over the last points below 1e-2 that
/// are still above 1e-14, using at most the last five. Needs three such values; throws
/// InsufficientData otherwise.
double order_estimate(const Vector& errors);

}  // namespace sshoot
