#include "singular_shoot/second_order.hpp"

#include <algorithm>
#include <cmath>

#include "singular_shoot/autodiff.hpp"
#include "singular_shoot/errors.hpp"
#include "singular_shoot/lie.hpp"

namespace sshoot {

namespace {

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix from_columns(std::size_t rows, const std::vector<Vector>& cols) {
  Matrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) m.set_col(j, cols[j]);
  return m;
}

Matrix restrict(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix b(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) b(i, j) = a(rows[i], cols[j]);
  return b;
}

std::vector<int> all_rows(std::size_t k) {
  std::vector<int> r(k);
  for (std::size_t i = 0; i < k; ++i) r[i] = static_cast<int>(i);
  return r;
}

double quad(const Vector& a, const Matrix& m, const Vector& b) { return dot(a, m * b); }

// Time derivatives of f_v and H_vx along (xd, pd, ud).
void chain_derivatives(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& p,
                       const Vector& xd, const Vector& ud, const Vector& pd, Matrix& fv_dot,
                       Matrix& hvx_dot) {
  const int n = prob.n(), m = prob.m();
  const std::vector<D1> x1 = seed<double>(x, xd), u1 = seed<double>(u, ud);
  fv_dot = Matrix(n, m);
  for (int i = 0; i < m; ++i) fv_dot.set_col(i, tangents(field<D1>(prob, i + 1, x1, u1)));
  hvx_dot = Matrix(m, n);
  std::vector<D2> u2(u.size()), p2(p.size());
  for (std::size_t a = 0; a < u.size(); ++a) u2[a] = D2(D1(u[a], ud[a]), D1(0.0));
  for (int s = 0; s < n; ++s) p2[s] = D2(D1(p[s], pd[s]), D1(0.0));
  for (int s = 0; s < n; ++s) {
    std::vector<D2> x2(n);
    for (int q = 0; q < n; ++q) x2[q] = D2(D1(x[q], xd[q]), D1(q == s ? 1.0 : 0.0));
    const std::vector<D2> hv = switching_function<D2>(prob, x2, u2, p2);
    for (int i = 0; i < m; ++i) hvx_dot(i, s) = hv[i].d.d;
  }
}

double trapezoid(const std::vector<double>& grid, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    s += 0.5 * (grid[i + 1] - grid[i]) * (f[i] + f[i + 1]);
  return s;
}

void check_aligned(const Extremal& ext, std::size_t k, const char* what) {
  if (k != ext.size()) throw GridMismatch(std::string(what) + " not aligned with the grid");
}

// Hessian of the endpoint Lagrangian applied twice to (a0, aT).
double endpoint_second(const ProblemDef& prob, const Extremal& ext, const Vector& a0,
                       const Vector& aT) {
  const int n = prob.n();
  const Vector& x0 = ext.x.front();
  const Vector& xT = ext.x.back();
  std::vector<D2> x0d(n), xTd(n);
  for (int s = 0; s < n; ++s) {
    x0d[s] = D2(D1(x0[s], a0[s]), D1(a0[s], 0.0));
    xTd[s] = D2(D1(xT[s], aT[s]), D1(aT[s], 0.0));
  }
  const std::vector<D2> b = lift_vec<D2>(ext.beta);
  return endpoint_lagrangian<D2>(prob, x0d, xTd, b).d.d;
}

bool node_singular(const Extremal& ext, std::size_t i) {
  const std::size_t ph = ext.phase.empty() ? 0 : ext.phase[i];
  return ph < ext.arcs.size() && !ext.arcs[ph].singular.empty();
}

const ArcSpec& node_arc(const Extremal& ext, std::size_t i) {
  const std::size_t ph = ext.phase.empty() ? 0 : ext.phase[i];
  return ext.arcs.at(ph);
}

}  // namespace

NodeDerivatives node_derivatives(const ProblemDef& prob, const Vector& x, const Vector& u,
                                 const Vector& v, const Vector& p) {
  using std::vector;
  const vector<D1> u1 = lift_vec<D1>(u), v1 = lift_vec<D1>(v), p1 = lift_vec<D1>(p),
                   x1 = lift_vec<D1>(x);
  NodeDerivatives d;
  d.fx = jacobian([&](const vector<D1>& xs) { return dynamics<D1>(prob, xs, u1, v1); }, x);
  d.fu = Matrix(prob.n(), prob.l());
  if (prob.l() > 0)
    d.fu = jacobian([&](const vector<D1>& us) { return dynamics<D1>(prob, x1, us, v1); }, u);
  vector<Vector> cols;
  for (int i = 0; i < prob.m(); ++i) cols.push_back(field<double>(prob, i + 1, x, u));
  d.fv = from_columns(prob.n(), cols);
  d.Hxx = jacobian([&](const vector<D1>& xs) { return hamiltonian_dx<D1>(prob, xs, u1, v1, p1); },
                   x);
  d.Hux = Matrix(prob.l(), prob.n());
  if (prob.l() > 0)
    d.Hux = jacobian(
        [&](const vector<D1>& xs) { return hamiltonian_du<D1>(prob, xs, u1, v1, p1); }, x);
  d.Huu = hamiltonian_uu(prob, x, u, v, p);
  d.Hvx = Matrix(prob.m(), prob.n());
  if (prob.m() > 0)
    d.Hvx = jacobian(
        [&](const vector<D1>& xs) { return switching_function<D1>(prob, xs, u1, p1); }, x);
  d.Huv = Matrix(prob.m(), prob.l());
  if (prob.m() > 0 && prob.l() > 0)
    d.Huv = jacobian(
        [&](const vector<D1>& us) { return switching_function<D1>(prob, x1, us, p1); }, u);
  return d;
}

GohMatrices goh_matrices(const ProblemDef& prob, const Extremal& ext, double slc_tol) {
  ext.validate(prob);
  GohMatrices g;
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const Vector &x = ext.x[i], &u = ext.u[i], &v = ext.v[i], &p = ext.p[i];
    NodeDerivatives d = node_derivatives(prob, x, u, v, p);
    const Vector xd = dynamics(prob, x, u, v);
    const Vector pd = costate_rhs(prob, x, u, v, p);
    const Vector ud = prob.l() > 0 ? u_dot_feedback(prob, x, u, v, p, slc_tol) : Vector{};
    Matrix fv_dot, hvx_dot;
    chain_derivatives(prob, x, u, p, xd, ud, pd, fv_dot, hvx_dot);

    const Matrix fvT = d.fv.transpose();
    const Matrix B = d.fx * d.fv - fv_dot;
    const Matrix hf = d.Hvx * d.fv;
    const Matrix S = sym(hf);
    const Matrix S_dot = sym(hvx_dot * d.fv + d.Hvx * fv_dot);
    const Matrix HB = d.Hvx * B;
    g.B.push_back(B);
    g.M.push_back(fvT * d.Hxx - hvx_dot - d.Hvx * d.fx);
    g.E.push_back(fvT * d.Hux.transpose() - d.Hvx * d.fu);
    g.S.push_back(S);
    g.G.push_back(0.5 * (hf - hf.transpose()));
    g.R.push_back(fvT * d.Hxx * d.fv - (HB + HB.transpose()) - S_dot);
    g.S_dot.push_back(S_dot);
    g.d.push_back(std::move(d));
  }
  return g;
}

std::vector<Matrix> phase_derivative(const Extremal& ext, const std::vector<Matrix>& values) {
  check_aligned(ext, values.size(), "values");
  std::vector<Matrix> out(values.size());
  std::size_t a = 0;
  while (a < ext.size()) {
    std::size_t b = a;
    const int ph = ext.phase.empty() ? 0 : ext.phase[a];
    while (b + 1 < ext.size() && (ext.phase.empty() ? 0 : ext.phase[b + 1]) == ph) ++b;
    const std::size_t k = b - a + 1;
    if (k < 5) throw GridMismatch("phase derivative needs five nodes per phase");
    const double h = (ext.grid[b] - ext.grid[a]) / static_cast<double>(k - 1);
    for (std::size_t i = a; i < b; ++i)
      if (std::abs(ext.grid[i + 1] - ext.grid[i] - h) > 1e-9 * (1.0 + std::abs(h)))
        throw GridMismatch("phase derivative needs a uniform grid");
    auto comb = [&](std::size_t base, std::initializer_list<double> w) {
      Matrix r(values[a].rows(), values[a].cols());
      std::size_t j = base;
      for (double c : w) r += (c / (12.0 * h)) * values[j++];
      return r;
    };
    out[a] = comb(a, {-25.0, 48.0, -36.0, 16.0, -3.0});
    out[a + 1] = comb(a, {-3.0, -10.0, 18.0, -6.0, 1.0});
    for (std::size_t i = a + 2; i + 2 <= b; ++i) out[i] = comb(i - 2, {1.0, -8.0, 0.0, 8.0, -1.0});
    out[b - 1] = comb(b - 4, {-1.0, 6.0, -18.0, 10.0, 3.0});
    out[b] = comb(b - 4, {3.0, -16.0, 36.0, -48.0, 25.0});
    a = b + 1;
  }
  return out;
}

GohDirection goh_transform(const ProblemDef& prob, const Extremal& ext, const Direction& dir) {
  check_aligned(ext, dir.x.size(), "x direction");
  check_aligned(ext, dir.v.size(), "v direction");
  if (!dir.u.empty()) check_aligned(ext, dir.u.size(), "u direction");
  const int m = prob.m();
  GohDirection g;
  g.grid = ext.grid;
  g.x = dir.x;
  g.v = dir.v;
  g.u = dir.u.empty() ? std::vector<Vector>(ext.size(), Vector(prob.l(), 0.0)) : dir.u;
  Vector y(m, 0.0);
  for (std::size_t i = 0; i < ext.size(); ++i) {
    if (i > 0) {
      const double h = ext.grid[i] - ext.grid[i - 1];
      for (int k = 0; k < m; ++k) y[k] += 0.5 * h * (dir.v[i - 1][k] + dir.v[i][k]);
    }
    g.y.push_back(y);
    Vector xi = dir.x[i];
    for (int k = 0; k < m; ++k) {
      const Vector fk = field<double>(prob, k + 1, ext.x[i], ext.u[i]);
      for (int s = 0; s < prob.n(); ++s) xi[s] -= fk[s] * y[k];
    }
    g.xi.push_back(std::move(xi));
  }
  g.h = y;
  return g;
}

GohIdentityErrors verify_goh_identities(const ProblemDef& prob, const Extremal& ext) {
  const GohMatrices g = goh_matrices(prob, ext);
  const std::vector<Matrix> s_dot_fd = phase_derivative(ext, g.S);
  GohIdentityErrors err;
  for (std::size_t i = 0; i < ext.size(); ++i) {
    if (!node_singular(ext, i)) continue;
    const ArcSpec& arc = node_arc(ext, i);
    const Vector &x = ext.x[i], &u = ext.u[i], &v = ext.v[i], &p = ext.p[i];
    const std::vector<int>& sing = arc.singular;

    // E = -d/du of p.[f(v), f_i].
    if (prob.l() > 0) {
      const std::vector<D1> x1 = lift_vec<D1>(x), p1 = lift_vec<D1>(p);
      const Matrix dhv = jacobian(
          [&](const std::vector<D1>& us) { return hv_dot_drift<D1>(prob, v, x1, us, p1); }, u);
      err.err_E = std::max(err.err_E, (g.E[i] + dhv).max_abs());
    }

    const Matrix R_fd = g.R[i] + g.S_dot[i] - s_dot_fd[i];
    Matrix lhs = restrict(R_fd, sing, sing);
    if (prob.l() > 0) {
      const Matrix Es = restrict(g.E[i], sing, all_rows(prob.l()));
      lhs -= Es * inverse(g.d[i].Huu) * Es.transpose();
    }
    const GammaSystem gs = gamma_system(prob, x, u, v, p, arc);
    err.err_R = std::max(err.err_R, (lhs + gs.Gamma).max_abs());
  }
  return err;
}

double omega_original(const ProblemDef& prob, const Extremal& ext, const Direction& dir) {
  check_aligned(ext, dir.x.size(), "x direction");
  check_aligned(ext, dir.v.size(), "v direction");
  const bool has_u = !dir.u.empty();
  if (has_u) check_aligned(ext, dir.u.size(), "u direction");
  std::vector<double> f(ext.size());
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const NodeDerivatives d = node_derivatives(prob, ext.x[i], ext.u[i], ext.v[i], ext.p[i]);
    const Vector& xb = dir.x[i];
    const Vector& vb = dir.v[i];
    double val = quad(xb, d.Hxx, xb) + 2.0 * quad(vb, d.Hvx, xb);
    if (has_u) {
      const Vector& ub = dir.u[i];
      val += quad(ub, d.Huu, ub) + 2.0 * quad(ub, d.Hux, xb) + 2.0 * quad(vb, d.Huv, ub);
    }
    f[i] = val;
  }
  return endpoint_second(prob, ext, dir.x.front(), dir.x.back()) + trapezoid(ext.grid, f);
}

double omega_p2(const ProblemDef& prob, const Extremal& ext, const GohDirection& dir,
                const GohMatrices* mats, bool include_g_term) {
  check_aligned(ext, dir.xi.size(), "xi");
  check_aligned(ext, dir.y.size(), "y");
  check_aligned(ext, dir.u.size(), "u");
  if (include_g_term) check_aligned(ext, dir.v.size(), "v");
  GohMatrices local;
  if (!mats) {
    local = goh_matrices(prob, ext);
    mats = &local;
  }
  const std::size_t last = ext.size() - 1;
  const NodeDerivatives& dT = mats->d[last];
  Vector aT = dir.xi[last];
  const Vector fvh = dT.fv * dir.h;
  for (std::size_t s = 0; s < aT.size(); ++s) aT[s] += fvh[s];
  const double g = endpoint_second(prob, ext, dir.xi.front(), aT) +
                   2.0 * quad(dir.h, dT.Hvx, dir.xi[last]) + quad(dir.h, mats->S[last], dir.h);
  std::vector<double> f(ext.size());
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const NodeDerivatives& d = mats->d[i];
    const Vector &xi = dir.xi[i], &ub = dir.u[i], &y = dir.y[i];
    double val = quad(xi, d.Hxx, xi) + 2.0 * quad(ub, d.Hux, xi) + 2.0 * quad(y, mats->M[i], xi) +
                 quad(ub, d.Huu, ub) + 2.0 * quad(y, mats->E[i], ub) + quad(y, mats->R[i], y);
    if (include_g_term) val += 2.0 * quad(dir.v[i], mats->G[i], y);
    f[i] = val;
  }
  return g + trapezoid(ext.grid, f);
}

double gamma_order(const GohDirection& dir) {
  const std::size_t k = dir.grid.size();
  if (dir.u.size() != k || dir.y.size() != k || dir.xi.size() != k)
    throw GridMismatch("direction not aligned with its grid");
  std::vector<double> f(k);
  for (std::size_t i = 0; i < k; ++i) f[i] = dot(dir.u[i], dir.u[i]) + dot(dir.y[i], dir.y[i]);
  const Vector& x0 = dir.x.empty() ? dir.xi.front() : dir.x.front();
  return dot(x0, x0) + dot(dir.h, dir.h) + trapezoid(dir.grid, f);
}

CoercivityReport coercivity_certificate(const ProblemDef& prob, const Extremal& ext,
                                        bool singular_only, const GohMatrices* mats) {
  GohMatrices local;
  if (!mats) {
    local = goh_matrices(prob, ext);
    mats = &local;
  }
  CoercivityReport rep;
  rep.rho = std::numeric_limits<double>::infinity();
  const int l = prob.l();
  for (std::size_t i = 0; i < ext.size(); ++i) {
    std::vector<int> sing = all_rows(prob.m());
    if (singular_only) {
      if (!node_singular(ext, i)) continue;
      sing = node_arc(ext, i).singular;
    }
    const std::size_t ms = sing.size();
    Matrix A(l + ms, l + ms);
    A.set_block(0, 0, mats->d[i].Huu);
    const Matrix E = restrict(mats->E[i], sing, all_rows(l));
    A.set_block(l, 0, E);
    A.set_block(0, l, E.transpose());
    A.set_block(l, l, restrict(mats->R[i], sing, sing));
    const double e = eig_min_symmetric(sym(A));
    if (e < rep.rho) {
      rep.rho = e;
      rep.node = i;
    }
  }
  return rep;
}

LSMapping map_ls_to_lqs(const ProblemDef& prob, const Extremal& ext, const LSSolution& ls,
                        const GohMatrices* mats) {
  check_aligned(ext, ls.p.size(), "p direction");
  GohMatrices local;
  if (!mats) {
    local = goh_matrices(prob, ext);
    mats = &local;
  }
  LSMapping out;
  out.dir = goh_transform(prob, ext, Direction{ls.x, ls.u, ls.v});
  const GohDirection& gd = out.dir;
  const int n = prob.n();
  for (std::size_t i = 0; i < ext.size(); ++i) {
    Vector chi = ls.p[i];
    const Vector yH = mats->d[i].Hvx.transpose() * gd.y[i];
    for (int s = 0; s < n; ++s) chi[s] += yH[s];
    out.lq.chi.push_back(std::move(chi));
  }
  out.lq.chi_h.assign(prob.m(), 0.0);
  out.lq.beta_lq = ls.beta;

  std::vector<Matrix> chi_m;
  for (const Vector& c : out.lq.chi) chi_m.push_back(Matrix(1, n, c));
  const std::vector<Matrix> chi_dot = phase_derivative(ext, chi_m);

  LQSResiduals& r = out.residuals;
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const NodeDerivatives& d = mats->d[i];
    const Vector& chi = out.lq.chi[i];
    const Matrix chiT = Matrix(1, n, chi);
    const Vector &xi = gd.xi[i], &ub = gd.u[i], &y = gd.y[i];
    // -chi' = chi f_x + xi^T H_xx + u^T H_ux + y^T M
    const Vector c = d.fx.transpose() * chi;
    const Vector a1 = d.Hxx * xi;
    const Vector a2 = d.Hux.transpose() * ub;
    const Vector a3 = mats->M[i].transpose() * y;
    for (int s = 0; s < n; ++s) {
      const double res = chi_dot[i](0, s) + c[s] + a1[s] + a2[s] + a3[s];
      r.costate = std::max(r.costate, std::abs(res));
    }
    // chi f_u + (H_ux xi)^T + u^T H_uu + y^T E
    if (prob.l() > 0) {
      const Matrix cf = chiT * d.fu;
      const Vector b1 = d.Hux * xi, b2 = d.Huu * ub, b3 = mats->E[i].transpose() * y;
      for (int a = 0; a < prob.l(); ++a)
        r.stationary_u = std::max(r.stationary_u, std::abs(cf(0, a) + b1[a] + b2[a] + b3[a]));
    }
    // chi B + xi^T M^T + u^T E^T + y^T R on singular components
    if (node_singular(ext, i)) {
      const Matrix cb = chiT * mats->B[i];
      const Vector e1 = mats->M[i] * xi, e2 = mats->E[i] * ub, e3 = mats->R[i] * y;
      for (int k : node_arc(ext, i).singular)
        r.stationary_y = std::max(r.stationary_y, std::abs(cb(0, k) + e1[k] + e2[k] + e3[k]));
    }
  }
  return out;
}

double goh_residual(const ProblemDef& prob, const Extremal& ext) {
  double r = 0.0;
  for (std::size_t i = 0; i < ext.size(); ++i)
    for (int a = 1; a <= prob.m(); ++a)
      for (int b = a + 1; b <= prob.m(); ++b) {
        const Vector br = lie_bracket(prob, a, b, ext.x[i], ext.u[i]);
        r = std::max(r, std::abs(dot(ext.p[i], br)));
      }
  return r;
}

}  // namespace sshoot
