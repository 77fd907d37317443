#include "singular_shoot/gauss_newton.hpp"

#include <cmath>

#include "singular_shoot/errors.hpp"

namespace sshoot {

std::string to_string(GNStatus s) {
  switch (s) {
    case GNStatus::Converged: return "Converged";
    case GNStatus::MaxIter: return "MaxIter";
    case GNStatus::SingularJacobian: return "SingularJacobian";
    case GNStatus::LineSearchFail: return "LineSearchFail";
  }
  return "Unknown";
}

namespace {

bool try_residual(const ResidualFn& residual, const Vector& nu, Vector& out) {
  try {
    out = residual(nu);
  } catch (const Error&) {
    return false;
  }
  for (double a : out)
    if (!std::isfinite(a)) return false;
  return true;
}

void attach_order(GNReport& rep) {
  if (rep.iterates.size() < 4) return;
  const Vector& last = rep.iterates.back();
  Vector errs;
  for (std::size_t k = 0; k + 1 < rep.iterates.size(); ++k) {
    double e = 0.0;
    for (std::size_t i = 0; i < last.size(); ++i)
      e = std::max(e, std::abs(rep.iterates[k][i] - last[i]));
    errs.push_back(e);
  }
  try {
    rep.order_estimate = order_estimate(errs);
  } catch (const InsufficientData&) {
  }
}

}  // namespace

GNResult gn_solve(const ResidualFn& residual, const JacobianFn& jacobian, const Vector& nu0,
                  const GNOptions& opts) {
  if (!(opts.tol_residual > 0.0) || !(opts.tol_step > 0.0) || opts.max_iter < 0)
    throw InvalidParams("Gauss-Newton tolerances must be positive");
  GNResult res;
  GNReport& rep = res.report;
  Vector nu = nu0;
  Vector S = residual(nu);
  double snorm = norm2(S);
  rep.iterates.push_back(nu);
  rep.residual_norms.push_back(snorm);
  rep.step_norms.push_back(0.0);

  for (int it = 0;; ++it) {
    if (snorm <= opts.tol_residual) {
      rep.status = GNStatus::Converged;
      break;
    }
    if (it >= opts.max_iter) {
      rep.status = GNStatus::MaxIter;
      break;
    }
    const Matrix J = jacobian(nu);
    Vector minus_s(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) minus_s[i] = -S[i];
    Vector delta;
    try {
      delta = solve_least_squares(J, minus_s);
    } catch (const RankDeficient& e) {
      rep.status = GNStatus::SingularJacobian;
      rep.message = e.what();
      break;
    }

    double alpha = 1.0;
    Vector trial, St;
    bool accepted = false;
    if (opts.damping == Damping::None) {
      trial = axpy(1.0, delta, nu);
      accepted = try_residual(residual, trial, St);
    } else {
      const Vector jd = J * delta;
      const double slope = dot(S, jd);  // derivative of |S|^2 / 2 along delta
      const double f0 = 0.5 * snorm * snorm;
      for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
        trial = axpy(alpha, delta, nu);
        if (!try_residual(residual, trial, St)) continue;
        const double ft = 0.5 * dot(St, St);
        if (ft <= f0 + opts.armijo_c * alpha * slope && ft < f0) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      rep.status = GNStatus::LineSearchFail;
      rep.message = "no acceptable step at iteration " + std::to_string(it);
      break;
    }
    const double step = alpha * norm2(delta);
    nu = std::move(trial);
    S = std::move(St);
    snorm = norm2(S);
    rep.iterates.push_back(nu);
    rep.residual_norms.push_back(snorm);
    rep.step_norms.push_back(step);
    if (step <= opts.tol_step * (1.0 + norm2(nu))) {
      rep.status = GNStatus::Converged;
      break;
    }
  }
  attach_order(rep);
  res.nu = nu;
  return res;
}

double order_estimate(const Vector& errors) {
  Vector e;
  for (double a : errors)
    if (a < 1e-2 && a > 1e-14) e.push_back(a);
  if (e.size() < 3) throw InsufficientData("order estimate needs three errors in (1e-14, 1e-2)");
  if (e.size() > 5) e.erase(e.begin(), e.end() - 5);
  // Fit log e_{k+1} = q log e_k + c over consecutive pairs.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double np = static_cast<double>(e.size() - 1);
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    const double x = std::log(e[k]), y = std::log(e[k + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = np * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InsufficientData("errors do not decrease");
  return (np * sxy - sx * sy) / den;
}

}  // namespace sshoot
