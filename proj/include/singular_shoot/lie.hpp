#pragma once

// Lie and Poisson brackets, derivatives of the switching function, and the
// feedback elimination of the controls.

#include <functional>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "singular_shoot/autodiff.hpp"
#include "singular_shoot/model.hpp"

namespace sshoot {

template <class V>
using scalar_of = typename std::decay_t<V>::value_type;

template <class S>
std::vector<S> sub(const std::vector<S>& a, const std::vector<S>& b) {
  std::vector<S> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

/// [g, h](x) = Dh(x) g(x) - Dg(x) h(x) for generic vector maps g and h.
template <class S, class G, class H>
std::vector<S> bracket(G&& g, H&& h, const std::vector<S>& x) {
  const std::vector<S> gx = g(x);
  const std::vector<S> hx = h(x);
  return sub(tangents(h(seed<S>(x, gx))), tangents(g(seed<S>(x, hx))));
}

/// Generic map x -> f_i(x, u) with u frozen.
template <class T>
auto field_map(const ProblemDef& prob, int i, const std::vector<T>& u) {
  return [&prob, i, &u](const auto& xx) {
    using W = scalar_of<decltype(xx)>;
    const std::vector<W> uw = lift_vec<W>(u);
    return field<W>(prob, i, std::span<const W>(xx), std::span<const W>(uw));
  };
}

/// Generic map x -> f0 + sum c_j f_j with u frozen.
template <class T>
auto drift_map(const ProblemDef& prob, std::span<const double> c, const std::vector<T>& u) {
  return [&prob, c, &u](const auto& xx) {
    using W = scalar_of<decltype(xx)>;
    const std::vector<W> uw = lift_vec<W>(u);
    return combined_field<W>(prob, c, std::span<const W>(xx), std::span<const W>(uw));
  };
}

/// Lie bracket [f_i, f_j] of two fields, 0 <= i, j <= m.
template <class S>
std::vector<S> lie_bracket(const ProblemDef& prob, int i, int j, const std::vector<S>& x,
                           const std::vector<S>& u) {
  return bracket<S>(field_map(prob, i, u), field_map(prob, j, u), x);
}

/// [F0, f_{k+1}] where F0 = f0 + sum_j c_j f_j; k is an affine component index.
template <class S>
std::vector<S> drift_bracket(const ProblemDef& prob, std::span<const double> c, int k,
                             const std::vector<S>& x, const std::vector<S>& u) {
  return bracket<S>(drift_map(prob, c, u), field_map(prob, k + 1, u), x);
}

/// Generic map x -> [F0, f_{k+1}](x, u) with u frozen.
template <class T>
auto drift_bracket_map(const ProblemDef& prob, std::span<const double> c, int k,
                       const std::vector<T>& u) {
  return [&prob, c, k, &u](const auto& xx) {
    using W = scalar_of<decltype(xx)>;
    const std::vector<W> uw = lift_vec<W>(u);
    return drift_bracket<W>(prob, c, k, xx, uw);
  };
}

/// [f_outer, [f0, f_inner]] with field indices.
template <class S>
std::vector<S> nested_bracket(const ProblemDef& prob, int outer, int inner,
                              const std::vector<S>& x, const std::vector<S>& u) {
  const std::vector<double> zero(prob.m(), 0.0);
  return bracket<S>(field_map(prob, outer, u), drift_bracket_map(prob, zero, inner - 1, u), x);
}

/// Component k: p . [F0, f_{k+1}] with F0 = f0 + sum c_j f_j.
template <class S>
std::vector<S> hv_dot_drift(const ProblemDef& prob, std::span<const double> c,
                            const std::vector<S>& x, const std::vector<S>& u,
                            const std::vector<S>& p) {
  std::vector<S> out(prob.m());
  for (int k = 0; k < prob.m(); ++k) {
    const std::vector<S> b = drift_bracket<S>(prob, c, k, x, u);
    out[k] = dot_generic<S>(p, b);
  }
  return out;
}

/// Component k: p . [f0, f_{k+1}].
template <class S>
std::vector<S> hv_dot(const ProblemDef& prob, const std::vector<S>& x, const std::vector<S>& u,
                      const std::vector<S>& p) {
  const std::vector<double> zero(prob.m(), 0.0);
  return hv_dot_drift<S>(prob, zero, x, u, p);
}

/// H_uu (l x l, row-major) at a generic scalar.
template <class S>
std::vector<S> hamiltonian_uu(const ProblemDef& prob, const std::vector<S>& x,
                              const std::vector<S>& u, const std::vector<S>& v,
                              const std::vector<S>& p) {
  using W1 = Dual<S>;
  using W2 = Dual<W1>;
  const int l = prob.l();
  const std::vector<W2> xw = lift_vec<W2>(x), vw = lift_vec<W2>(v), pw = lift_vec<W2>(p);
  std::vector<S> h(static_cast<std::size_t>(l) * l);
  for (int a = 0; a < l; ++a)
    for (int b = a; b < l; ++b) {
      std::vector<W2> uw(l);
      for (int k = 0; k < l; ++k)
        uw[k] = W2(W1(u[k], S(k == a ? 1.0 : 0.0)), W1(S(k == b ? 1.0 : 0.0), S(0.0)));
      const S hab = hamiltonian<W2>(prob, xw, uw, vw, pw).d.d;
      h[a * l + b] = hab;
      h[b * l + a] = hab;
    }
  return h;
}

/// H_ux applied to a state direction w: component a is d^2H/du_a dx . w.
template <class S>
std::vector<S> hamiltonian_ux_times(const ProblemDef& prob, const std::vector<S>& x,
                                    const std::vector<S>& u, const std::vector<S>& v,
                                    const std::vector<S>& p, const std::vector<S>& w) {
  using W1 = Dual<S>;
  using W2 = Dual<W1>;
  const int l = prob.l(), n = prob.n();
  const std::vector<W2> vw = lift_vec<W2>(v), pw = lift_vec<W2>(p);
  std::vector<W2> xw(n);
  for (int s = 0; s < n; ++s) xw[s] = W2(W1(x[s], S(0.0)), W1(w[s], S(0.0)));
  std::vector<S> out(l);
  for (int a = 0; a < l; ++a) {
    std::vector<W2> uw(l);
    for (int k = 0; k < l; ++k) uw[k] = W2(W1(u[k], S(k == a ? 1.0 : 0.0)), W1(S(0.0), S(0.0)));
    out[a] = hamiltonian<W2>(prob, xw, uw, vw, pw).d.d;
  }
  return out;
}

/// Columns of f_u: entry [a] is df/du_a (length n).
template <class S>
std::vector<std::vector<S>> dynamics_du(const ProblemDef& prob, const std::vector<S>& x,
                                        const std::vector<S>& u, const std::vector<S>& v) {
  using W = Dual<S>;
  const std::vector<W> xw = lift_vec<W>(x), vw = lift_vec<W>(v);
  std::vector<std::vector<S>> cols(prob.l());
  for (int a = 0; a < prob.l(); ++a)
    cols[a] = tangents(dynamics<W>(prob, xw, seed_unit<S>(u, a), vw));
  return cols;
}

/// u_dot = -H_uu^{-1} (H_ux f - f_u^T H_x^T) at a generic scalar.
template <class S>
std::vector<S> u_dot_generic(const ProblemDef& prob, const std::vector<S>& x,
                             const std::vector<S>& u, const std::vector<S>& v,
                             const std::vector<S>& p) {
  const int l = prob.l();
  if (l == 0) return {};
  const std::vector<S> f = dynamics<S>(prob, x, u, v);
  const std::vector<S> hx = hamiltonian_dx<S>(prob, x, u, v, p);
  const std::vector<S> huxf = hamiltonian_ux_times<S>(prob, x, u, v, p, f);
  const std::vector<std::vector<S>> fu = dynamics_du<S>(prob, x, u, v);
  std::vector<S> rhs(l);
  for (int a = 0; a < l; ++a) rhs[a] = -(huxf[a] - dot_generic<S>(fu[a], hx));
  return solve_generic<S>(hamiltonian_uu<S>(prob, x, u, v, p), rhs);
}

/// Second time derivative of H_{v_k} along the flow with controls (u, v):
/// p.[f, b] + p.D_u b . u_dot where b = [F0, f_{k+1}], F0 = f0 + sum c_j f_j
/// and f the full dynamics at v.
template <class S>
S hv_ddot(const ProblemDef& prob, std::span<const double> c, int k, const std::vector<S>& x,
          const std::vector<S>& u, const std::vector<S>& v, const std::vector<S>& p) {
  using W = Dual<S>;
  const std::vector<S> f = dynamics<S>(prob, x, u, v);
  const std::vector<S> b = drift_bracket<S>(prob, c, k, x, u);
  const std::vector<W> uw = lift_vec<W>(u), vw = lift_vec<W>(v);
  // D_x b . f
  const std::vector<S> db_f = tangents(drift_bracket<W>(prob, c, k, seed<S>(x, f), uw));
  // D_x f . b
  const std::vector<S> df_b = tangents(dynamics<W>(prob, seed<S>(x, b), uw, vw));
  S r = dot_generic<S>(p, db_f) - dot_generic<S>(p, df_b);
  if (prob.l() > 0) {
    const std::vector<S> ud = u_dot_generic<S>(prob, x, u, v, p);
    const std::vector<W> xw = lift_vec<W>(x);
    const std::vector<S> db_u = tangents(drift_bracket<W>(prob, c, k, xw, seed<S>(u, ud)));
    r += dot_generic<S>(p, db_u);
  }
  return r;
}

/// E (m x l, row-major): E_{ja} = (H_ux f_{j+1})_a - (p D_x f_{j+1}) . df/du_a.
template <class S>
std::vector<S> goh_E(const ProblemDef& prob, const std::vector<S>& x, const std::vector<S>& u,
                     const std::vector<S>& v, const std::vector<S>& p) {
  using W = Dual<S>;
  const int m = prob.m(), l = prob.l(), n = prob.n();
  std::vector<S> e(static_cast<std::size_t>(m) * l);
  if (l == 0) return e;
  const std::vector<std::vector<S>> fu = dynamics_du<S>(prob, x, u, v);
  const std::vector<W> uw = lift_vec<W>(u);
  for (int j = 0; j < m; ++j) {
    const std::vector<S> fj = field<S>(prob, j + 1, x, u);
    const std::vector<S> huxf = hamiltonian_ux_times<S>(prob, x, u, v, p, fj);
    std::vector<S> hvx(n);  // p D_x f_{j+1}
    for (int s = 0; s < n; ++s) {
      const std::vector<S> col = tangents(field<W>(prob, j + 1, seed_unit<S>(x, s), uw));
      hvx[s] = dot_generic<S>(p, col);
    }
    for (int a = 0; a < l; ++a) e[j * l + a] = huxf[a] - dot_generic<S>(hvx, fu[a]);
  }
  return e;
}

/// Concatenate fixed bang values with singular values into a full v vector.
template <class S>
std::vector<S> full_v(const ArcSpec& arc, const std::vector<S>& v_sing) {
  std::vector<S> v = lift_vec<S>(arc.fixed_v);
  for (std::size_t k = 0; k < arc.singular.size(); ++k) v[arc.singular[k]] = v_sing[k];
  return v;
}

/// Feedback residual G(u, v_S) = (H_u, -Hddot_{v_S}) whose root defines the controls.
template <class S>
std::vector<S> feedback_residual(const ProblemDef& prob, const ArcSpec& arc,
                                 const std::vector<S>& x, const std::vector<S>& p,
                                 const std::vector<S>& u, const std::vector<S>& v_sing) {
  const std::vector<S> v = full_v<S>(arc, v_sing);
  std::vector<S> r = hamiltonian_du<S>(prob, x, u, v, p);
  for (int k : arc.singular) r.push_back(-hv_ddot<S>(prob, arc.fixed_v, k, x, u, v, p));
  return r;
}

struct GammaSystem {
  Vector gamma0;  // gamma_{i0}
  Matrix Gamma;   // gamma_{ij}
};

struct FeedbackControls {
  Vector u;       // length l
  Vector v_sing;  // over the singular set
  Vector v;       // full length m, bang values inserted
  int iterations = 0;
};

struct FeedbackOptions {
  int max_iter = 50;
  int max_halvings = 20;
  double tol = 1e-12;
  double slc_tol = 1e-9;
};

// Plain-double entry points.
Vector lie_bracket(const ProblemDef& prob, int i, int j, const Vector& x, const Vector& u);
Vector nested_bracket(const ProblemDef& prob, int outer, int inner, const Vector& x,
                      const Vector& u);
Vector hv_dot(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& p);
/// p.[f(v), f_i] + p D_u f_i u_dot, the derivative of H_v without assuming the
/// Goh conditions.
Vector hv_dot_full(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p);
/// Throws SLCViolation when eig_min(H_uu) < slc_tol.
Vector u_dot_feedback(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                      const Vector& p, double slc_tol = 1e-9);
Matrix hamiltonian_uu(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                      const Vector& p);

using ScalarMap = std::function<D1(const std::vector<D1>& x, const std::vector<D1>& p)>;
/// {g, h} = D_x g . D_p h - D_p g . D_x h.
double poisson_bracket(const ScalarMap& g, const ScalarMap& h, const Vector& x, const Vector& p);

/// gamma_{i0} and gamma_{ij} on the singular set, drift f0 + sum of the frozen
/// bang fields in `arc`. Uses -H_uu^{-1} E^T for the u_dot dependence on v.
GammaSystem gamma_system(const ProblemDef& prob, const Vector& x, const Vector& u,
                         const Vector& v, const Vector& p, const ArcSpec& arc,
                         double slc_tol = 1e-9);
GammaSystem gamma_system(const ProblemDef& prob, const Vector& x, const Vector& u,
                         const Vector& v, const Vector& p, const std::vector<int>& singular_set,
                         double slc_tol = 1e-9);

/// v = -Gamma^{-1} gamma0. Throws SingularArcDegenerate if
/// |det Gamma| < 1e-10 (1 + |Gamma|_inf^{m_s}).
Vector singular_v(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& p,
                  const ArcSpec& arc, double slc_tol = 1e-9);
Vector singular_v(const GammaSystem& gs);

/// Newton iteration on (H_u, -Hddot_v) = 0 from the guess.
FeedbackControls feedback_controls(const ProblemDef& prob, const Vector& x, const Vector& p,
                                   const Vector& u_guess, const Vector& v_guess,
                                   const ArcSpec& arc, const FeedbackOptions& opts = {});

/// dG/d(u, v_S) at a point, computed with first-order duals.
Matrix feedback_jacobian(const ProblemDef& prob, const ArcSpec& arc, const Vector& x,
                         const Vector& p, const Vector& u, const Vector& v_sing);

/// Tangent of the feedback controls through the implicit function theorem:
/// values stay at `ctrl`, tangents are -J^{-1} dG.
void feedback_tangent(const ProblemDef& prob, const ArcSpec& arc, const std::vector<D1>& x,
                      const std::vector<D1>& p, const FeedbackControls& ctrl,
                      const Matrix& jac_inv, std::vector<D1>& u, std::vector<D1>& v);

struct SLCMargins {
  double huu = std::numeric_limits<double>::infinity();    // eig_min(H_uu)
  double gamma = std::numeric_limits<double>::infinity();  // eig_min(-Gamma)
};
SLCMargins slc_margins(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                       const Vector& p, const ArcSpec& arc);

}  // namespace sshoot
