#pragma once

// Built-in problems: the degenerate LQ problem and the SIRS
// treatment-vaccination model, plus two small test problems.

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "singular_shoot/model.hpp"

namespace sshoot {

struct SIRSParams {
  double N0 = 5000.0, S0 = 4500.0, I0 = 499.0;
  double alpha = 4e-5, K = 5000.0, mu = 1e-5, beta = 0.5, omega = 0.01, gamma = 0.1,
         delta = 0.1;
  double B1 = 1.0, B2 = 50.0, B3 = 1000.0;
  double v_max = 0.25;
  double T = 100.0;

  /// Throws InvalidParams unless all parameters are positive and S0 + I0 <= N0.
  void validate() const;
};

struct LQParams {
  double T = 2.0;
  double v_lo = 0.0, v_hi = 0.5;
  double x1_T = 1.0, x1_0 = 0.0, x2_0 = 0.0;
  double w_x1 = 1.0, w_x2 = 1.0, w_u = 1.0, w_x2v = 10.0;
  double terminal = -2.0;  // coefficient of x2(T) in the cost
};

/// State (N, S, I, C); u treatment, v vaccination.
struct SIRSModel {
  SIRSParams prm;

  std::string name() const { return "sirs"; }
  ProblemDims dims() const { return {4, 1, 1, 4}; }

  template <class S>
  S growth(const S& N) const {
    return prm.alpha * N * (1.0 - N / prm.K);
  }

  template <class S>
  void field(int i, std::span<const S> x, std::span<const S> u, std::span<S> out) const {
    const S& N = x[0];
    const S& Sv = x[1];
    const S& I = x[2];
    if (primal(N) == 0.0) throw DomainError("SIRS field at N = 0");
    if (i == 0) {
      const S F = growth(N);
      const S inf = prm.beta * I * Sv / N;
      out[0] = F - prm.delta * I - prm.mu * N;
      out[1] = F - inf + prm.omega * (N - Sv - I) - prm.mu * Sv;
      out[2] = inf - (prm.gamma + prm.delta + prm.mu) * I - u[0] * I;
      out[3] = prm.B1 * I + prm.B3 * u[0] * u[0];
    } else {
      out[0] = S(0.0);
      out[1] = -Sv;
      out[2] = S(0.0);
      out[3] = S(prm.B2);
    }
  }

  template <class S>
  S phi(std::span<const S> /*x0*/, std::span<const S> xT) const {
    return xT[3];
  }

  template <class S>
  void eta(std::span<const S> x0, std::span<const S> /*xT*/, std::span<S> out) const {
    out[0] = x0[0] - prm.N0;
    out[1] = x0[1] - prm.S0;
    out[2] = x0[2] - prm.I0;
    out[3] = x0[3];
  }
};

/// State (x1, x2, C); cost terminal*x2(T) + C(T).
struct LQModel {
  LQParams prm;

  std::string name() const { return "degenerate_lq"; }
  ProblemDims dims() const { return {3, 1, 1, 4}; }

  template <class S>
  void field(int i, std::span<const S> x, std::span<const S> u, std::span<S> out) const {
    if (i == 0) {
      out[0] = x[1] + u[0];
      out[1] = S(0.0);
      out[2] = prm.w_x1 * x[0] * x[0] + prm.w_x2 * x[1] * x[1] + prm.w_u * u[0] * u[0];
    } else {
      out[0] = S(0.0);
      out[1] = S(1.0);
      out[2] = prm.w_x2v * x[1];
    }
  }

  template <class S>
  S phi(std::span<const S> /*x0*/, std::span<const S> xT) const {
    return prm.terminal * xT[1] + xT[2];
  }

  template <class S>
  void eta(std::span<const S> x0, std::span<const S> xT, std::span<S> out) const {
    out[0] = xT[0] - prm.x1_T;
    out[1] = x0[0] - prm.x1_0;
    out[2] = x0[1] - prm.x2_0;
    out[3] = x0[2];
  }
};

/// Same fields as LQModel with free initial (x1, x2) and a terminal cost
/// making x1 = cosh(sqrt2 t), x2 = sinh(sqrt2 t)/sqrt2, v = x1 a totally
/// singular extremal on [0, 1].
struct SingularLQModel {
  std::string name() const { return "singular_lq"; }
  ProblemDims dims() const { return {3, 1, 1, 1}; }

  static double x2_final() { return std::sinh(std::sqrt(2.0)) / std::sqrt(2.0); }

  template <class S>
  void field(int i, std::span<const S> x, std::span<const S> u, std::span<S> out) const {
    LQModel{}.field<S>(i, x, u, out);
  }

  template <class S>
  S phi(std::span<const S> /*x0*/, std::span<const S> xT) const {
    return xT[2] - 2.0 * x2_final() * xT[0] - 10.0 * x2_final() * xT[1];
  }

  template <class S>
  void eta(std::span<const S> x0, std::span<const S> /*xT*/, std::span<S> out) const {
    out[0] = x0[2];
  }
};

/// x' = -rate x without controls; cost x(T)^2, x(0) = x0.
struct FreeDecayModel {
  double rate = 0.5;
  double x0 = 1.0;

  std::string name() const { return "free_decay"; }
  ProblemDims dims() const { return {1, 0, 0, 1}; }

  template <class S>
  void field(int /*i*/, std::span<const S> x, std::span<const S> /*u*/, std::span<S> out) const {
    out[0] = -rate * x[0];
  }

  template <class S>
  S phi(std::span<const S> /*x0*/, std::span<const S> xT) const {
    return xT[0] * xT[0];
  }

  template <class S>
  void eta(std::span<const S> x0_, std::span<const S> /*xT*/, std::span<S> out) const {
    out[0] = x0_[0] - x0;
  }
};

ProblemDef build_sirs(const SIRSParams& params = {});
ProblemDef build_lq(const LQParams& params = {});
/// Horizon 1, v unbounded.
ProblemDef build_singular_lq();
ProblemDef build_free_decay(double rate = 0.5, double x0 = 1.0, double T = 1.0);

/// Closed-form singular vaccination on the singular manifold H_v = dH_v/dt = 0,
/// with u from the treatment stationarity condition. Throws DegeneratePoint if
/// p_I, S, I or N is below 1e-12 in magnitude, or omega = 0 with I < 1e-8.
double sirs_singular_v_closed_form(const SIRSParams& params, const Vector& x, const Vector& p);
/// The same expression without the mortality terms in the second component of
/// w2; differs from the generic singular control by a term proportional to
/// alpha*mu.
double sirs_singular_v_printed(const SIRSParams& params, const Vector& x, const Vector& p);
/// u = p_I I / (2 B3 p_C).
double sirs_treatment_feedback(const SIRSParams& params, const Vector& x, const Vector& p);

/// True iff every node has u >= -1e-8.
bool check_nonneg_treatment(const Extremal& ext);

/// Registered model names accepted by the config loader.
std::vector<std::string> registered_models();
/// Builds a registered model from a parameter map; unknown keys throw InvalidParams.
ProblemDef build_registered(const std::string& name, const std::map<std::string, double>& params);

}  // namespace sshoot
