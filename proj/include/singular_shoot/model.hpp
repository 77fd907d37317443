#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "singular_shoot/autodiff.hpp"
#include "singular_shoot/linalg.hpp"

namespace sshoot {

/// Dimensions of a partially control-affine problem in Mayer form.
struct ProblemDims {
  int n = 0;      // states
  int l = 0;      // nonlinear controls u
  int m = 0;      // affine controls v
  int d_eta = 0;  // endpoint constraints
};

#define SSHOOT_MODEL_SCALAR_API(S)                                                      \
  virtual void field(int i, std::span<const S> x, std::span<const S> u, std::span<S> out) \
      const = 0;                                                                        \
  virtual S phi(std::span<const S> x0, std::span<const S> xT) const = 0;                \
  virtual void eta(std::span<const S> x0, std::span<const S> xT, std::span<S> out) const = 0;

/// The vector fields f_0..f_m, the cost phi and the constraints eta, callable
/// on every scalar type used by the library.
class VectorFieldModel {
 public:
  virtual ~VectorFieldModel() = default;
  virtual std::string name() const = 0;
  virtual ProblemDims dims() const = 0;

  SSHOOT_MODEL_SCALAR_API(double)
  SSHOOT_MODEL_SCALAR_API(D1)
  SSHOOT_MODEL_SCALAR_API(D2)
  SSHOOT_MODEL_SCALAR_API(D3)
};

#undef SSHOOT_MODEL_SCALAR_API

#define SSHOOT_ADAPT_SCALAR(S)                                                           \
  void field(int i, std::span<const S> x, std::span<const S> u, std::span<S> out)        \
      const override {                                                                   \
    impl_.template field<S>(i, x, u, out);                                               \
  }                                                                                      \
  S phi(std::span<const S> x0, std::span<const S> xT) const override {                   \
    return impl_.template phi<S>(x0, xT);                                                \
  }                                                                                      \
  void eta(std::span<const S> x0, std::span<const S> xT, std::span<S> out) const override { \
    impl_.template eta<S>(x0, xT, out);                                                  \
  }

/// Wraps a struct with templated field/phi/eta members into a VectorFieldModel.
template <class Impl>
class ModelAdapter final : public VectorFieldModel {
 public:
  explicit ModelAdapter(Impl impl) : impl_(std::move(impl)) {}
  std::string name() const override { return impl_.name(); }
  ProblemDims dims() const override { return impl_.dims(); }
  const Impl& impl() const { return impl_; }

  SSHOOT_ADAPT_SCALAR(double)
  SSHOOT_ADAPT_SCALAR(D1)
  SSHOOT_ADAPT_SCALAR(D2)
  SSHOOT_ADAPT_SCALAR(D3)

 private:
  Impl impl_;
};

#undef SSHOOT_ADAPT_SCALAR

struct Bounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Immutable problem definition: fields, endpoint data, horizon and bounds.
class ProblemDef {
 public:
  /// Smoke-evaluates every field, phi and eta at (sample_x, sample_u).
  /// Throws InvalidParams on bad dimensions or non-finite evaluations.
  ProblemDef(std::shared_ptr<const VectorFieldModel> model, double T, std::vector<Bounds> v_bounds,
             Vector sample_x, Vector sample_u, double u_set_margin = 0.0);

  int n() const { return dims_.n; }
  int l() const { return dims_.l; }
  int m() const { return dims_.m; }
  int d_eta() const { return dims_.d_eta; }
  const ProblemDims& dims() const { return dims_; }
  double T() const { return T_; }
  const std::vector<Bounds>& v_bounds() const { return v_bounds_; }
  double u_set_margin() const { return u_set_margin_; }
  const Vector& sample_x() const { return sample_x_; }
  const Vector& sample_u() const { return sample_u_; }
  const VectorFieldModel& model() const { return *model_; }
  std::string name() const { return model_->name(); }

  /// Optional bounds on u used by the direct oracle only.
  std::vector<Bounds> u_bounds;

 private:
  std::shared_ptr<const VectorFieldModel> model_;
  ProblemDims dims_;
  double T_;
  std::vector<Bounds> v_bounds_;
  Vector sample_x_;
  Vector sample_u_;
  double u_set_margin_;
};

/// Which affine components are singular on an arc; the others are frozen at
/// fixed_v (full length m, entries at singular indices are zero).
struct ArcSpec {
  std::vector<int> singular;
  Vector fixed_v;

  bool is_singular(int i) const;
  static ArcSpec all_singular(int m);
};

/// A discretized candidate solution. `phase` gives the arc index of each node,
/// `arcs` the arc type of each phase.
struct Extremal {
  std::vector<double> grid;
  std::vector<Vector> x, p, u, v;
  Vector beta;
  std::vector<int> phase;
  std::vector<ArcSpec> arcs;

  std::size_t size() const { return grid.size(); }
  /// Throws GridMismatch if arrays disagree or the grid is not non-decreasing.
  void validate(const ProblemDef& prob) const;
};

// ---------------------------------------------------------------------------
// Generic evaluation. S is double, D1, D2 or D3.

template <class S>
std::vector<S> field(const ProblemDef& prob, int i, std::span<const S> x, std::span<const S> u) {
  std::vector<S> out(prob.n());
  prob.model().field(i, x, u, std::span<S>(out));
  return out;
}

/// f0 + sum_j v_j f_j with v of the same scalar type.
template <class S>
std::vector<S> dynamics(const ProblemDef& prob, std::span<const S> x, std::span<const S> u,
                        std::span<const S> v) {
  std::vector<S> out = field<S>(prob, 0, x, u);
  std::vector<S> fi(prob.n());
  for (int i = 0; i < prob.m(); ++i) {
    prob.model().field(i + 1, x, u, std::span<S>(fi));
    for (int s = 0; s < prob.n(); ++s) out[s] += v[i] * fi[s];
  }
  return out;
}

/// f0 + sum_j c_j f_j with constant coefficients.
template <class S>
std::vector<S> combined_field(const ProblemDef& prob, std::span<const double> c,
                              std::span<const S> x, std::span<const S> u) {
  std::vector<S> out = field<S>(prob, 0, x, u);
  std::vector<S> fi(prob.n());
  for (int i = 0; i < prob.m(); ++i) {
    if (c[i] == 0.0) continue;
    prob.model().field(i + 1, x, u, std::span<S>(fi));
    for (int s = 0; s < prob.n(); ++s) out[s] += c[i] * fi[s];
  }
  return out;
}

template <class S>
S dot_generic(std::span<const S> a, std::span<const S> b) {
  S s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class S>
S hamiltonian(const ProblemDef& prob, std::span<const S> x, std::span<const S> u,
              std::span<const S> v, std::span<const S> p) {
  const std::vector<S> f = dynamics<S>(prob, x, u, v);
  return dot_generic<S>(p, f);
}

template <class S>
S endpoint_lagrangian(const ProblemDef& prob, std::span<const S> x0, std::span<const S> xT,
                      std::span<const S> beta) {
  S l = prob.model().phi(x0, xT);
  if (prob.d_eta() > 0) {
    std::vector<S> e(prob.d_eta());
    prob.model().eta(x0, xT, std::span<S>(e));
    for (int j = 0; j < prob.d_eta(); ++j) l += beta[j] * e[j];
  }
  return l;
}

template <class S>
std::vector<S> eta_values(const ProblemDef& prob, std::span<const S> x0, std::span<const S> xT) {
  std::vector<S> e(prob.d_eta());
  if (prob.d_eta() > 0) prob.model().eta(x0, xT, std::span<S>(e));
  return e;
}

/// H_x as a row: component s is dH/dx_s.
template <class S>
std::vector<S> hamiltonian_dx(const ProblemDef& prob, std::span<const S> x, std::span<const S> u,
                              std::span<const S> v, std::span<const S> p) {
  using W = Dual<S>;
  const std::vector<W> uw = lift_vec<W>(u), vw = lift_vec<W>(v), pw = lift_vec<W>(p);
  std::vector<S> out(prob.n());
  for (int s = 0; s < prob.n(); ++s) {
    const std::vector<W> xw = seed_unit<S>(x, s);
    out[s] = hamiltonian<W>(prob, xw, uw, vw, pw).d;
  }
  return out;
}

/// H_u as a row of length l.
template <class S>
std::vector<S> hamiltonian_du(const ProblemDef& prob, std::span<const S> x, std::span<const S> u,
                              std::span<const S> v, std::span<const S> p) {
  using W = Dual<S>;
  const std::vector<W> xw = lift_vec<W>(x), vw = lift_vec<W>(v), pw = lift_vec<W>(p);
  std::vector<S> out(prob.l());
  for (int a = 0; a < prob.l(); ++a) {
    const std::vector<W> uw = seed_unit<S>(u, a);
    out[a] = hamiltonian<W>(prob, xw, uw, vw, pw).d;
  }
  return out;
}

/// Costate right-hand side -p D_x f.
template <class S>
std::vector<S> costate_rhs(const ProblemDef& prob, std::span<const S> x, std::span<const S> u,
                           std::span<const S> v, std::span<const S> p) {
  std::vector<S> r = hamiltonian_dx<S>(prob, x, u, v, p);
  for (auto& ri : r) ri = -ri;
  return r;
}

/// D_{x0} l and D_{xT} l.
template <class S>
void endpoint_lagrangian_gradients(const ProblemDef& prob, std::span<const S> x0,
                                   std::span<const S> xT, std::span<const S> beta,
                                   std::vector<S>& d0, std::vector<S>& dT) {
  using W = Dual<S>;
  const int n = prob.n();
  const std::vector<W> x0w = lift_vec<W>(x0), xTw = lift_vec<W>(xT), bw = lift_vec<W>(beta);
  d0.assign(n, S(0.0));
  dT.assign(n, S(0.0));
  for (int s = 0; s < n; ++s) {
    d0[s] = endpoint_lagrangian<W>(prob, seed_unit<S>(x0, s), xTw, bw).d;
    dT[s] = endpoint_lagrangian<W>(prob, x0w, seed_unit<S>(xT, s), bw).d;
  }
}

/// (p0 + D_{x0} l, pT - D_{xT} l).
template <class S>
std::vector<S> transversality_residuals(const ProblemDef& prob, std::span<const S> x0,
                                        std::span<const S> xT, std::span<const S> p0,
                                        std::span<const S> pT, std::span<const S> beta) {
  std::vector<S> d0, dT;
  endpoint_lagrangian_gradients<S>(prob, x0, xT, beta, d0, dT);
  const int n = prob.n();
  std::vector<S> r(2 * n);
  for (int s = 0; s < n; ++s) {
    r[s] = p0[s] + d0[s];
    r[n + s] = pT[s] - dT[s];
  }
  return r;
}

/// H_v: component i is p . f_{i+1}.
template <class S>
std::vector<S> switching_function(const ProblemDef& prob, std::span<const S> x,
                                  std::span<const S> u, std::span<const S> p) {
  std::vector<S> out(prob.m());
  for (int i = 0; i < prob.m(); ++i) {
    const std::vector<S> fi = field<S>(prob, i + 1, x, u);
    out[i] = dot_generic<S>(p, fi);
  }
  return out;
}

// Plain-double conveniences.
Vector dynamics(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v);
double hamiltonian(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p);
double endpoint_lagrangian(const ProblemDef& prob, const Vector& x0, const Vector& xT,
                           const Vector& beta);
Vector costate_rhs(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p);
Vector transversality_residuals(const ProblemDef& prob, const Vector& x0, const Vector& xT,
                                const Vector& p0, const Vector& pT, const Vector& beta);
Vector switching_function(const ProblemDef& prob, const Vector& x, const Vector& u,
                          const Vector& p);

}  // namespace sshoot
