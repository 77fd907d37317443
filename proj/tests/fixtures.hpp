#pragma once

// Converged solutions shared by the tests of one executable.

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "singular_shoot/models.hpp"
#include "singular_shoot/pipeline.hpp"
#include "singular_shoot/second_order.hpp"

namespace sshoot::testing {

inline SolverConfig lq_config() {
  SolverConfig cfg;
  cfg.model = "degenerate_lq";
  return cfg;
}

inline SolverConfig sirs_config() {
  SolverConfig cfg;
  cfg.model = "sirs";
  cfg.band = 0.02;
  cfg.gn.tol_residual = 1e-9;
  return cfg;
}

inline const SolveOutcome& lq_solution() {
  static const SolveOutcome out = solve_pipeline(build_lq(), lq_config());
  return out;
}

inline const SolveOutcome& sirs_solution() {
  static const SolveOutcome out = solve_pipeline(build_sirs(), sirs_config());
  return out;
}

struct Refined {
  TPShootingPoint nu;
  ShootingOptions opts;
  Extremal extremal;
  GNReport report;
};

/// Re-solves the multi-phase problem at a different step count, starting from
/// a converged solution.
inline Refined refine(const ProblemDef& prob, const SolveOutcome& base, int steps,
                      double tol = 1e-10) {
  Refined r;
  r.opts.steps = steps;
  for (int k = 0; k < base.structure.N(); ++k) {
    std::size_t q = 0;
    while (base.extremal.phase[q] != k) ++q;
    ControlGuess g;
    g.u = base.extremal.u[q];
    for (int s : base.extremal.arcs[k].singular) g.v_sing.push_back(base.extremal.v[q][s]);
    r.opts.guesses.push_back(g);
  }
  const ControlStructure& cs = base.structure;
  const int N = cs.N();
  auto R = [&](const Vector& z) {
    return tp_residual(prob, cs, TPShootingPoint::unpack(prob, N, z), r.opts);
  };
  auto J = [&](const Vector& z) {
    return tp_jacobian(prob, cs, TPShootingPoint::unpack(prob, N, z), r.opts);
  };
  GNOptions go;
  go.tol_residual = tol;
  GNResult gn = gn_solve(R, J, base.nu.pack(), go);
  r.report = gn.report;
  r.nu = TPShootingPoint::unpack(prob, N, gn.nu);
  r.extremal = assemble_extremal(prob, cs, r.nu, r.opts);
  return r;
}

inline const Refined& lq_refined(int steps) {
  static std::map<int, Refined> cache;
  auto it = cache.find(steps);
  if (it == cache.end()) it = cache.emplace(steps, refine(build_lq(), lq_solution(), steps)).first;
  return it->second;
}

inline const Refined& sirs_refined(int steps) {
  static std::map<int, Refined> cache;
  auto it = cache.find(steps);
  if (it == cache.end())
    it = cache.emplace(steps, refine(build_sirs(), sirs_solution(), steps, 1e-9)).first;
  return it->second;
}

/// Solution of the linearized Hamiltonian system along a multi-phase extremal,
/// started from (dx0, dp0) and carried through the switches with fixed switch
/// times. Bang components stay frozen, so their variation is zero.
inline LSSolution linearized_path(const ProblemDef& prob, const Extremal& ext, int steps,
                                  const std::vector<ControlGuess>& guesses, const Vector& dx0,
                                  const Vector& dp0) {
  LSSolution ls;
  TangentSeed seed{dx0, dp0, 0.0};
  std::size_t q = 0;
  for (int k = 0; q < ext.size(); ++k) {
    const std::size_t first = q;
    while (q < ext.size() && ext.phase[q] == k) ++q;
    HamiltonianFlow flow;
    flow.prob = &prob;
    flow.arc = ext.arcs[k];
    flow.scale = ext.grid[q - 1] - ext.grid[first];
    const ControlGuess* g = k < static_cast<int>(guesses.size()) ? &guesses[k] : nullptr;
    const TangentResult tr =
        integrate_tangents(flow, ext.x[first], ext.p[first], 0.0, 1.0, steps, {seed}, g, true);
    for (const auto& node : tr.path) {
      auto d = [](const std::vector<D1>& a) {
        Vector r;
        for (const D1& z : a) r.push_back(z.d);
        return r;
      };
      ls.x.push_back(d(node[0].x));
      ls.p.push_back(d(node[0].p));
      ls.u.push_back(d(node[0].u));
      ls.v.push_back(d(node[0].v));
    }
    seed.dx0 = ls.x.back();
    seed.dp0 = ls.p.back();
  }
  ls.beta.assign(prob.d_eta(), 0.0);
  return ls;
}

/// Central differences with step h (1 + |nu_c|) per column.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& nu,
                          double h = 1e-6) {
  const Vector f0 = f(nu);
  Matrix J(f0.size(), nu.size());
  for (std::size_t c = 0; c < nu.size(); ++c) {
    Vector a = nu, b = nu;
    const double hc = h * (1.0 + std::abs(nu[c]));
    a[c] += hc;
    b[c] -= hc;
    const Vector fa = f(a), fb = f(b);
    for (std::size_t r = 0; r < f0.size(); ++r) J(r, c) = (fa[r] - fb[r]) / (2.0 * hc);
  }
  return J;
}

/// max over columns of |J_c - F_c|_inf / (1 + |F_c|_inf).
inline double column_relative_error(const Matrix& J, const Matrix& F) {
  double worst = 0.0;
  for (std::size_t c = 0; c < J.cols(); ++c) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t r = 0; r < J.rows(); ++r) {
      diff = std::max(diff, std::abs(J(r, c) - F(r, c)));
      ref = std::max(ref, std::abs(F(r, c)));
    }
    worst = std::max(worst, diff / (1.0 + ref));
  }
  return worst;
}

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = U(rng);
  return a;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Vector v(n);
  for (double& x : v) x = U(rng);
  return v;
}

}  // namespace sshoot::testing
