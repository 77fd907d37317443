#include "singular_shoot/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

HamiltonianFlow HamiltonianFlow::singular(const ProblemDef& prob, double scale) {
  HamiltonianFlow f;
  f.prob = &prob;
  f.arc = ArcSpec::all_singular(prob.m());
  f.scale = scale;
  return f;
}

namespace {

struct StageEval {
  FeedbackControls ctrl;
  Vector dx, dp;
  Matrix jac_inv;
};

void check_flow(const HamiltonianFlow& flow, const Vector& x0, const Vector& p0, int steps) {
  if (!flow.prob) throw InvalidParams("flow without problem");
  if (steps < 4) throw StepsTooFew("steps = " + std::to_string(steps) + " < 4");
  const ProblemDef& prob = *flow.prob;
  if (static_cast<int>(x0.size()) != prob.n() || static_cast<int>(p0.size()) != prob.n())
    throw DimensionMismatch("initial state/costate dimension");
  if (static_cast<int>(flow.arc.fixed_v.size()) != prob.m())
    throw DimensionMismatch("fixed_v must have length m");
}

StageEval evaluate(const HamiltonianFlow& flow, const Vector& x, const Vector& p,
                   const FeedbackControls& warm, double t, bool need_jac) {
  const ProblemDef& prob = *flow.prob;
  StageEval e;
  try {
    e.ctrl = feedback_controls(prob, x, p, warm.u, warm.v_sing, flow.arc, flow.feedback);
  } catch (const Error& err) {
    throw IntegrationFailure(t, err.what());
  }
  e.dx = dynamics<double>(prob, x, e.ctrl.u, e.ctrl.v);
  e.dp = costate_rhs<double>(prob, x, e.ctrl.u, e.ctrl.v, p);
  for (double& a : e.dx) a *= flow.scale;
  for (double& a : e.dp) a *= flow.scale;
  for (double a : e.dx)
    if (!std::isfinite(a)) throw IntegrationFailure(t, "non-finite state derivative");
  for (double a : e.dp)
    if (!std::isfinite(a)) throw IntegrationFailure(t, "non-finite costate derivative");
  if (need_jac && (prob.l() + e.ctrl.v_sing.size()) > 0) {
    try {
      e.jac_inv = inverse(feedback_jacobian(prob, flow.arc, x, p, e.ctrl.u, e.ctrl.v_sing));
    } catch (const Error& err) {
      throw IntegrationFailure(t, std::string("feedback Jacobian: ") + err.what());
    }
  }
  return e;
}

FeedbackControls initial_warm(const HamiltonianFlow& flow, const ControlGuess* guess) {
  const ProblemDef& prob = *flow.prob;
  FeedbackControls w;
  w.u = prob.sample_u();
  w.v_sing.assign(flow.arc.singular.size(), 0.0);
  if (guess) {
    if (static_cast<int>(guess->u.size()) == prob.l()) w.u = guess->u;
    if (guess->v_sing.size() == flow.arc.singular.size()) w.v_sing = guess->v_sing;
  }
  return w;
}

Vector combine(const Vector& y, double a, const Vector& k) { return axpy(a, k, y); }

Extremal empty_segment(const HamiltonianFlow& flow, int steps) {
  Extremal seg;
  seg.grid.reserve(steps + 1);
  seg.x.reserve(steps + 1);
  seg.p.reserve(steps + 1);
  seg.u.reserve(steps + 1);
  seg.v.reserve(steps + 1);
  seg.arcs = {flow.arc};
  return seg;
}

void push_node(Extremal& seg, double t, const Vector& x, const Vector& p,
               const FeedbackControls& c) {
  seg.grid.push_back(t);
  seg.x.push_back(x);
  seg.p.push_back(p);
  seg.u.push_back(c.u);
  seg.v.push_back(c.v);
  seg.phase.push_back(0);
}

// Tangent of the scaled right-hand side at a dual state.
void tangent_rhs(const HamiltonianFlow& flow, const StageEval& e, const Vector& x,
                 const Vector& p, const Vector& tx, const Vector& tp, double dscale, Vector& kx,
                 Vector& kp, NodeDual* record) {
  const ProblemDef& prob = *flow.prob;
  const int n = prob.n();
  std::vector<D1> xd(n), pd(n);
  for (int s = 0; s < n; ++s) {
    xd[s] = D1(x[s], tx[s]);
    pd[s] = D1(p[s], tp[s]);
  }
  std::vector<D1> ud, vd;
  feedback_tangent(prob, flow.arc, xd, pd, e.ctrl, e.jac_inv, ud, vd);
  const D1 sc(flow.scale, dscale);
  const std::vector<D1> f = dynamics<D1>(prob, xd, ud, vd);
  const std::vector<D1> hx = hamiltonian_dx<D1>(prob, xd, ud, vd, pd);
  kx.resize(n);
  kp.resize(n);
  for (int s = 0; s < n; ++s) {
    kx[s] = (sc * f[s]).d;
    kp[s] = -(sc * hx[s]).d;
  }
  if (record) *record = NodeDual{xd, pd, ud, vd};
}

}  // namespace

Extremal integrate(const HamiltonianFlow& flow, const Vector& x0, const Vector& p0, double t0,
                   double t1, int steps, const ControlGuess* guess) {
  check_flow(flow, x0, p0, steps);
  const double h = (t1 - t0) / steps;
  Extremal seg = empty_segment(flow, steps);
  Vector x = x0, p = p0;
  StageEval e1 = evaluate(flow, x, p, initial_warm(flow, guess), t0, false);
  push_node(seg, t0, x, p, e1.ctrl);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const StageEval e2 =
        evaluate(flow, combine(x, 0.5 * h, e1.dx), combine(p, 0.5 * h, e1.dp), e1.ctrl, t + 0.5 * h, false);
    const StageEval e3 =
        evaluate(flow, combine(x, 0.5 * h, e2.dx), combine(p, 0.5 * h, e2.dp), e2.ctrl, t + 0.5 * h, false);
    const StageEval e4 =
        evaluate(flow, combine(x, h, e3.dx), combine(p, h, e3.dp), e3.ctrl, t + h, false);
    for (std::size_t s = 0; s < x.size(); ++s) {
      x[s] += h / 6.0 * (e1.dx[s] + 2.0 * e2.dx[s] + 2.0 * e3.dx[s] + e4.dx[s]);
      p[s] += h / 6.0 * (e1.dp[s] + 2.0 * e2.dp[s] + 2.0 * e3.dp[s] + e4.dp[s]);
    }
    const double tn = (k + 1 == steps) ? t1 : t0 + (k + 1) * h;
    e1 = evaluate(flow, x, p, e4.ctrl, tn, false);
    push_node(seg, tn, x, p, e1.ctrl);
  }
  return seg;
}

TangentResult integrate_tangents(const HamiltonianFlow& flow, const Vector& x0, const Vector& p0,
                                 double t0, double t1, int steps,
                                 const std::vector<TangentSeed>& seeds,
                                 const ControlGuess* guess, bool record_path) {
  check_flow(flow, x0, p0, steps);
  const std::size_t nc = seeds.size();
  const std::size_t n = x0.size();
  const double h = (t1 - t0) / steps;
  TangentResult res;
  res.values = empty_segment(flow, steps);
  res.start.resize(nc);
  res.end.resize(nc);

  Vector x = x0, p = p0;
  std::vector<Vector> tx(nc), tp(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    tx[c] = seeds[c].dx0.empty() ? Vector(n, 0.0) : seeds[c].dx0;
    tp[c] = seeds[c].dp0.empty() ? Vector(n, 0.0) : seeds[c].dp0;
  }

  StageEval e1 = evaluate(flow, x, p, initial_warm(flow, guess), t0, true);
  push_node(res.values, t0, x, p, e1.ctrl);
  std::vector<Vector> k1x(nc), k1p(nc), k2x(nc), k2p(nc), k3x(nc), k3p(nc), k4x(nc), k4p(nc);
  for (std::size_t c = 0; c < nc; ++c)
    tangent_rhs(flow, e1, x, p, tx[c], tp[c], seeds[c].dscale, k1x[c], k1p[c], &res.start[c]);
  if (record_path) res.path.push_back(res.start);

  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Vector x2 = combine(x, 0.5 * h, e1.dx), p2 = combine(p, 0.5 * h, e1.dp);
    const StageEval e2 = evaluate(flow, x2, p2, e1.ctrl, t + 0.5 * h, true);
    for (std::size_t c = 0; c < nc; ++c)
      tangent_rhs(flow, e2, x2, p2, combine(tx[c], 0.5 * h, k1x[c]),
                  combine(tp[c], 0.5 * h, k1p[c]), seeds[c].dscale, k2x[c], k2p[c], nullptr);

    const Vector x3 = combine(x, 0.5 * h, e2.dx), p3 = combine(p, 0.5 * h, e2.dp);
    const StageEval e3 = evaluate(flow, x3, p3, e2.ctrl, t + 0.5 * h, true);
    for (std::size_t c = 0; c < nc; ++c)
      tangent_rhs(flow, e3, x3, p3, combine(tx[c], 0.5 * h, k2x[c]),
                  combine(tp[c], 0.5 * h, k2p[c]), seeds[c].dscale, k3x[c], k3p[c], nullptr);

    const Vector x4 = combine(x, h, e3.dx), p4 = combine(p, h, e3.dp);
    const StageEval e4 = evaluate(flow, x4, p4, e3.ctrl, t + h, true);
    for (std::size_t c = 0; c < nc; ++c)
      tangent_rhs(flow, e4, x4, p4, combine(tx[c], h, k3x[c]), combine(tp[c], h, k3p[c]),
                  seeds[c].dscale, k4x[c], k4p[c], nullptr);

    for (std::size_t s = 0; s < n; ++s) {
      x[s] += h / 6.0 * (e1.dx[s] + 2.0 * e2.dx[s] + 2.0 * e3.dx[s] + e4.dx[s]);
      p[s] += h / 6.0 * (e1.dp[s] + 2.0 * e2.dp[s] + 2.0 * e3.dp[s] + e4.dp[s]);
    }
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t s = 0; s < n; ++s) {
        tx[c][s] += h / 6.0 * (k1x[c][s] + 2.0 * k2x[c][s] + 2.0 * k3x[c][s] + k4x[c][s]);
        tp[c][s] += h / 6.0 * (k1p[c][s] + 2.0 * k2p[c][s] + 2.0 * k3p[c][s] + k4p[c][s]);
      }

    const double tn = (k + 1 == steps) ? t1 : t0 + (k + 1) * h;
    e1 = evaluate(flow, x, p, e4.ctrl, tn, true);
    push_node(res.values, tn, x, p, e1.ctrl);
    const bool keep = record_path || k + 1 == steps;
    for (std::size_t c = 0; c < nc; ++c)
      tangent_rhs(flow, e1, x, p, tx[c], tp[c], seeds[c].dscale, k1x[c], k1p[c],
                  keep ? &res.end[c] : nullptr);
    if (record_path) res.path.push_back(res.end);
  }
  return res;
}

double hamiltonian_drift(const ProblemDef& prob, const Extremal& seg) {
  if (seg.size() == 0) return 0.0;
  const double h0 = hamiltonian<double>(prob, seg.x[0], seg.u[0], seg.v[0], seg.p[0]);
  double drift = 0.0;
  for (std::size_t i = 1; i < seg.size(); ++i) {
    const double hi = hamiltonian<double>(prob, seg.x[i], seg.u[i], seg.v[i], seg.p[i]);
    drift = std::max(drift, std::abs(hi - h0));
  }
  return drift;
}

void dense_output(const ProblemDef& prob, const Extremal& seg, double t, Vector& x, Vector& p) {
  const std::size_t k = seg.size();
  if (k < 2) throw GridMismatch("dense output needs two nodes");
  if (t < seg.grid.front() || t > seg.grid.back()) throw DomainError("time outside the segment");
  std::size_t i = 0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    if (seg.grid[j + 1] > seg.grid[j] && t >= seg.grid[j] && t <= seg.grid[j + 1]) {
      i = j;
      break;
    }
  }
  const double ta = seg.grid[i], tb = seg.grid[i + 1], h = tb - ta;
  const double s = (t - ta) / h;
  const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
  const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
  auto interp = [&](const Vector& ya, const Vector& yb, const Vector& da, const Vector& db) {
    Vector y(ya.size());
    for (std::size_t q = 0; q < y.size(); ++q)
      y[q] = h00 * ya[q] + h10 * h * da[q] + h01 * yb[q] + h11 * h * db[q];
    return y;
  };
  const Vector dxa = dynamics<double>(prob, seg.x[i], seg.u[i], seg.v[i]);
  const Vector dxb = dynamics<double>(prob, seg.x[i + 1], seg.u[i + 1], seg.v[i + 1]);
  const Vector dpa = costate_rhs<double>(prob, seg.x[i], seg.u[i], seg.v[i], seg.p[i]);
  const Vector dpb = costate_rhs<double>(prob, seg.x[i + 1], seg.u[i + 1], seg.v[i + 1], seg.p[i + 1]);
  x = interp(seg.x[i], seg.x[i + 1], dxa, dxb);
  p = interp(seg.p[i], seg.p[i + 1], dpa, dpb);
}

std::vector<Vector> rk4(const OdeRhs& f, const Vector& y0, double t0, double t1, int steps) {
  if (steps < 1) throw StepsTooFew("rk4 needs at least one step");
  const double h = (t1 - t0) / steps;
  std::vector<Vector> out{y0};
  Vector y = y0;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Vector k1 = f(t, y);
    const Vector k2 = f(t + 0.5 * h, axpy(0.5 * h, k1, y));
    const Vector k3 = f(t + 0.5 * h, axpy(0.5 * h, k2, y));
    const Vector k4 = f(t + h, axpy(h, k3, y));
    for (std::size_t s = 0; s < y.size(); ++s)
      y[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    out.push_back(y);
  }
  return out;
}

double rk4_step_doubling_error(const OdeRhs& f, const Vector& y0, double t0, double t1,
                               int steps) {
  const Vector a = rk4(f, y0, t0, t1, steps).back();
  const Vector b = rk4(f, y0, t0, t1, 2 * steps).back();
  double e = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) e = std::max(e, std::abs(a[s] - b[s]));
  return e / 15.0;
}

}  // namespace sshoot
