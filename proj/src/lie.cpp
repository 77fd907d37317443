#include "singular_shoot/lie.hpp"

#include <cmath>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

Vector lie_bracket(const ProblemDef& prob, int i, int j, const Vector& x, const Vector& u) {
  if (i < 0 || j < 0 || i > prob.m() || j > prob.m()) throw DimensionMismatch("field index");
  return lie_bracket<double>(prob, i, j, x, u);
}

Vector nested_bracket(const ProblemDef& prob, int outer, int inner, const Vector& x,
                      const Vector& u) {
  if (outer < 0 || outer > prob.m() || inner < 1 || inner > prob.m())
    throw DimensionMismatch("field index");
  return nested_bracket<double>(prob, outer, inner, x, u);
}

Vector hv_dot(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& p) {
  return hv_dot<double>(prob, x, u, p);
}

Vector hv_dot_full(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p) {
  const int m = prob.m();
  Vector out(m, 0.0);
  const Vector ud = prob.l() > 0 ? u_dot_generic<double>(prob, x, u, v, p) : Vector{};
  auto f_total = [&](const auto& xx) {
    using W = scalar_of<decltype(xx)>;
    const std::vector<W> uw = lift_vec<W>(u), vw = lift_vec<W>(v);
    return dynamics<W>(prob, xx, uw, vw);
  };
  const std::vector<D1> xw = lift_vec<D1>(x);
  for (int k = 0; k < m; ++k) {
    const Vector b = bracket<double>(f_total, field_map(prob, k + 1, u), x);
    out[k] = dot(p, b);
    if (prob.l() > 0) {
      const Vector dfu = tangents(field<D1>(prob, k + 1, xw, seed<double>(u, ud)));
      out[k] += dot(p, dfu);
    }
  }
  return out;
}

Matrix hamiltonian_uu(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                      const Vector& p) {
  const int l = prob.l();
  return Matrix(l, l, hamiltonian_uu<double>(prob, x, u, v, p));
}

Vector u_dot_feedback(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                      const Vector& p, double slc_tol) {
  if (prob.l() == 0) return {};
  const double e = eig_min_symmetric(hamiltonian_uu(prob, x, u, v, p));
  if (e < slc_tol) throw SLCViolation("eig_min(H_uu) = " + std::to_string(e));
  return u_dot_generic<double>(prob, x, u, v, p);
}

double poisson_bracket(const ScalarMap& g, const ScalarMap& h, const Vector& x, const Vector& p) {
  const std::size_t n = x.size();
  const std::vector<D1> xl = lift_vec<D1>(x), pl = lift_vec<D1>(p);
  double r = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::vector<D1> xs = seed_unit<double>(x, s), ps = seed_unit<double>(p, s);
    const double gx = g(xs, pl).d, gp = g(xl, ps).d;
    const double hx = h(xs, pl).d, hp = h(xl, ps).d;
    r += gx * hp - gp * hx;
  }
  return r;
}

GammaSystem gamma_system(const ProblemDef& prob, const Vector& x, const Vector& u,
                         const Vector& v, const Vector& p, const ArcSpec& arc, double slc_tol) {
  const int l = prob.l();
  const std::size_t ms = arc.singular.size();
  GammaSystem gs{Vector(ms, 0.0), Matrix(ms, ms)};
  if (ms == 0) return gs;

  Matrix huu_inv;
  std::vector<double> e;
  if (l > 0) {
    const Matrix huu = hamiltonian_uu(prob, x, u, v, p);
    const double em = eig_min_symmetric(huu);
    if (em < slc_tol) throw SLCViolation("eig_min(H_uu) = " + std::to_string(em));
    huu_inv = inverse(huu);
    e = goh_E<double>(prob, x, u, v, p);
  }
  // v with the singular components switched off gives gamma_{i0}.
  const Vector v0 = arc.fixed_v;
  const std::vector<D1> xl = lift_vec<D1>(x);
  for (std::size_t r = 0; r < ms; ++r) {
    const int i = arc.singular[r];
    gs.gamma0[r] = hv_ddot<double>(prob, arc.fixed_v, i, x, u, v0, p);
    for (std::size_t c = 0; c < ms; ++c) {
      const int j = arc.singular[c];
      // p.[f_j, b]
      const Vector lb = bracket<double>(field_map(prob, j + 1, u),
                                        drift_bracket_map(prob, arc.fixed_v, i, u), x);
      double g = dot(p, lb);
      if (l > 0) {
        // dudot/dv_j = -H_uu^{-1} E_j^T
        Vector ej(l);
        for (int a = 0; a < l; ++a) ej[a] = e[j * l + a];
        Vector w = huu_inv * ej;
        for (double& wa : w) wa = -wa;
        const Vector db = tangents(drift_bracket<D1>(prob, arc.fixed_v, i, xl, seed<double>(u, w)));
        g += dot(p, db);
      }
      gs.Gamma(r, c) = g;
    }
  }
  return gs;
}

GammaSystem gamma_system(const ProblemDef& prob, const Vector& x, const Vector& u,
                         const Vector& v, const Vector& p, const std::vector<int>& singular_set,
                         double slc_tol) {
  ArcSpec arc;
  arc.singular = singular_set;
  arc.fixed_v = v;
  for (int i : singular_set) arc.fixed_v[i] = 0.0;
  return gamma_system(prob, x, u, v, p, arc, slc_tol);
}

Vector singular_v(const GammaSystem& gs) {
  const std::size_t ms = gs.gamma0.size();
  if (ms == 0) return {};
  double ginf = 0.0;
  for (std::size_t i = 0; i < ms; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ms; ++j) row += std::abs(gs.Gamma(i, j));
    ginf = std::max(ginf, row);
  }
  const double det = determinant(gs.Gamma);
  const double tol = 1e-10 * (1.0 + std::pow(ginf, static_cast<double>(ms)));
  if (!(std::abs(det) >= tol))
    throw SingularArcDegenerate("|det Gamma| = " + std::to_string(std::abs(det)));
  Vector v = solve(gs.Gamma, gs.gamma0);
  for (double& vi : v) vi = -vi;
  return v;
}

Vector singular_v(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& p,
                  const ArcSpec& arc, double slc_tol) {
  return singular_v(gamma_system(prob, x, u, arc.fixed_v, p, arc, slc_tol));
}

namespace {

// Newton on H_u(u; v) = 0 with step halving.
Vector solve_u(const ProblemDef& prob, const Vector& x, const Vector& p, Vector u,
               const Vector& v, const FeedbackOptions& opts) {
  if (prob.l() == 0) return u;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector g = hamiltonian_du<double>(prob, x, u, v, p);
    const Matrix huu = hamiltonian_uu(prob, x, u, v, p);
    const double em = eig_min_symmetric(huu);
    if (em < opts.slc_tol) throw SLCViolation("eig_min(H_uu) = " + std::to_string(em));
    const Vector du = solve(huu, g);
    if (norm_inf(du) <= opts.tol * (1.0 + norm_inf(u))) return axpy(-1.0, du, u);
    const double r0 = norm_inf(g);
    double step = 1.0;
    for (int h = 0;; ++h) {
      Vector trial = axpy(-step, du, u);
      if (norm_inf(hamiltonian_du<double>(prob, x, trial, v, p)) < r0) {
        u = std::move(trial);
        break;
      }
      if (h == opts.max_halvings) throw NoConvergence("H_u Newton line search failed");
      step *= 0.5;
    }
  }
  throw NoConvergence("H_u Newton did not converge");
}

}  // namespace

FeedbackControls feedback_controls(const ProblemDef& prob, const Vector& x, const Vector& p,
                                   const Vector& u_guess, const Vector& v_guess,
                                   const ArcSpec& arc, const FeedbackOptions& opts) {
  const std::size_t ms = arc.singular.size();
  FeedbackControls out;
  out.u = u_guess;
  if (static_cast<int>(out.u.size()) != prob.l()) out.u.assign(prob.l(), 0.0);
  out.v_sing.assign(ms, 0.0);
  for (std::size_t k = 0; k < ms && k < v_guess.size(); ++k) out.v_sing[k] = v_guess[k];
  out.v = full_v<double>(arc, out.v_sing);

  for (int it = 1; it <= opts.max_iter; ++it) {
    out.iterations = it;
    const Vector u_old = out.u, vs_old = out.v_sing;
    out.u = solve_u(prob, x, p, out.u, out.v, opts);
    if (ms > 0) {
      out.v_sing = singular_v(gamma_system(prob, x, out.u, out.v, p, arc, opts.slc_tol));
      out.v = full_v<double>(arc, out.v_sing);
    }
    if (ms == 0) return out;
    double change = 0.0, scale = 1.0;
    for (std::size_t a = 0; a < out.u.size(); ++a) {
      change = std::max(change, std::abs(out.u[a] - u_old[a]));
      scale = std::max(scale, std::abs(out.u[a]));
    }
    for (std::size_t k = 0; k < ms; ++k) {
      change = std::max(change, std::abs(out.v_sing[k] - vs_old[k]));
      scale = std::max(scale, std::abs(out.v_sing[k]));
    }
    if (it > 1 && change <= opts.tol * scale) return out;
    // One pass is exact when H_u does not depend on v; check the joint residual.
    if (prob.l() == 0) return out;
    const Vector hu = hamiltonian_du<double>(prob, x, out.u, out.v, p);
    if (norm_inf(hu) <= opts.tol * scale) return out;
  }
  throw NoConvergence("feedback iteration did not converge in " +
                      std::to_string(opts.max_iter) + " iterations");
}

Matrix feedback_jacobian(const ProblemDef& prob, const ArcSpec& arc, const Vector& x,
                         const Vector& p, const Vector& u, const Vector& v_sing) {
  const int l = prob.l();
  const int k = l + static_cast<int>(v_sing.size());
  Matrix jac(k, k);
  const std::vector<D1> xl = lift_vec<D1>(x), pl = lift_vec<D1>(p);
  Vector alpha(u);
  alpha.insert(alpha.end(), v_sing.begin(), v_sing.end());
  for (int c = 0; c < k; ++c) {
    const std::vector<D1> a = seed_unit<double>(alpha, c);
    const std::vector<D1> ua(a.begin(), a.begin() + l), va(a.begin() + l, a.end());
    const std::vector<D1> g = feedback_residual<D1>(prob, arc, xl, pl, ua, va);
    for (int r = 0; r < k; ++r) jac(r, c) = g[r].d;
  }
  return jac;
}

void feedback_tangent(const ProblemDef& prob, const ArcSpec& arc, const std::vector<D1>& x,
                      const std::vector<D1>& p, const FeedbackControls& ctrl,
                      const Matrix& jac_inv, std::vector<D1>& u, std::vector<D1>& v) {
  const int l = prob.l();
  const std::size_t ms = arc.singular.size();
  const std::vector<D1> ul = lift_vec<D1>(ctrl.u), vl = lift_vec<D1>(ctrl.v_sing);
  u = ul;
  std::vector<D1> vs = vl;
  if (l + ms > 0) {
    const std::vector<D1> g = feedback_residual<D1>(prob, arc, x, p, ul, vl);
    const Vector gd = tangents(g);
    const Vector da = jac_inv * gd;
    for (int a = 0; a < l; ++a) u[a].d = -da[a];
    for (std::size_t k = 0; k < ms; ++k) vs[k].d = -da[l + k];
  }
  v = full_v<D1>(arc, vs);
}

SLCMargins slc_margins(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                       const Vector& p, const ArcSpec& arc) {
  SLCMargins mg;
  if (prob.l() > 0) mg.huu = eig_min_symmetric(hamiltonian_uu(prob, x, u, v, p));
  if (!arc.singular.empty()) {
    // slc_tol = -inf: the margin is reported, never enforced here.
    const GammaSystem gs =
        gamma_system(prob, x, u, v, p, arc, -std::numeric_limits<double>::infinity());
    // Symmetric part; Gamma is symmetric whenever the Goh conditions hold.
    const Matrix sym = -0.5 * (gs.Gamma + gs.Gamma.transpose());
    mg.gamma = eig_min_symmetric(sym);
  }
  return mg;
}

}  // namespace sshoot
