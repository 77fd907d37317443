#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "singular_shoot/models.hpp"
#include "singular_shoot/shooting.hpp"

using namespace sshoot;
using sshoot::testing::column_relative_error;
using sshoot::testing::fd_jacobian;

namespace {

// Analytic root of the singular LQ problem: x1 = cosh(sqrt2 t), p = (-2 x2, -10 x2, 1).
ShootingPoint singular_lq_root() {
  return ShootingPoint{{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {-1.0}};
}

// x' = -x, no controls, no constraints, no cost.
struct BareDecay {
  std::string name() const { return "bare_decay"; }
  ProblemDims dims() const { return {1, 0, 0, 0}; }
  template <class S>
  void field(int, std::span<const S> x, std::span<const S>, std::span<S> out) const {
    out[0] = -x[0];
  }
  template <class S>
  S phi(std::span<const S>, std::span<const S>) const {
    return S(0.0);
  }
  template <class S>
  void eta(std::span<const S>, std::span<const S>, std::span<S>) const {}
};

double max_abs(const Vector& r) {
  double m = 0.0;
  for (double z : r) m = std::max(m, std::abs(z));
  return m;
}

// A singular node in the middle of the SIRS singular phase, re-used as the
// start of a short problem.
struct SirsShort {
  ProblemDef prob;
  ShootingPoint nu;
  ShootingOptions opts;
};

SirsShort sirs_short() {
  const Extremal& e = sshoot::testing::sirs_solution().extremal;
  int k = 0;
  while (e.arcs[k].singular.empty()) ++k;
  std::vector<std::size_t> idx;
  for (std::size_t q = 0; q < e.size(); ++q)
    if (e.phase[q] == k) idx.push_back(q);
  const std::size_t q = idx[idx.size() / 2];
  SIRSParams prm;
  prm.N0 = e.x[q][0];
  prm.S0 = e.x[q][1];
  prm.I0 = e.x[q][2];
  prm.T = 5.0;
  SirsShort s{build_sirs(prm), ShootingPoint{e.x[q], e.p[q], e.beta}, {}};
  s.opts.steps = 100;
  ControlGuess g;
  g.u = e.u[q];
  g.v_sing = {e.v[q][0]};
  s.opts.guesses = {g};
  return s;
}

}  // namespace

TEST(OsResidual, VanishesAtAnalyticRoot) {
  const ProblemDef prob = build_singular_lq();
  const Vector r = os_residual(prob, singular_lq_root());
  EXPECT_EQ(r.size(), static_cast<std::size_t>(prob.d_eta() + 2 * prob.n() + 2 * prob.m()));
  EXPECT_LE(max_abs(r), 1e-8);
}

TEST(OsResidual, ExtremalFollowsClosedForm) {
  const ProblemDef prob = build_singular_lq();
  const Extremal e = os_extremal(prob, singular_lq_root());
  const double r2 = std::sqrt(2.0);
  for (std::size_t q = 0; q < e.size(); q += 50) {
    const double t = e.grid[q];
    EXPECT_NEAR(e.x[q][0], std::cosh(r2 * t), 1e-9);
    EXPECT_NEAR(e.x[q][1], std::sinh(r2 * t) / r2, 1e-9);
    EXPECT_NEAR(e.v[q][0], std::cosh(r2 * t), 1e-8);
    EXPECT_NEAR(e.p[q][1], -10.0 * std::sinh(r2 * t) / r2, 1e-8);
  }
}

TEST(OsResidual, NoConstraintsNoCostGivesCostates) {
  const ProblemDef prob(std::make_shared<ModelAdapter<BareDecay>>(BareDecay{}), 2.0, {},
                        Vector{1.0}, Vector{});
  const Vector r = os_residual(prob, ShootingPoint{{0.7}, {0.3}, {}});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0], 0.3);
  // p' = p, so p(T) = p0 e^T.
  EXPECT_NEAR(r[1], 0.3 * std::exp(2.0), 1e-8);
}

TEST(OsResidual, NoAffineControlsShape) {
  const ProblemDef prob = build_free_decay();
  const ShootingPoint nu{{1.0}, {-0.5}, {0.2}};
  EXPECT_EQ(os_residual(prob, nu).size(), 3u);
  EXPECT_EQ(os_jacobian(prob, nu).cols(), 3u);
}

TEST(OsResidual, BitwiseDeterministic) {
  const ProblemDef prob = build_singular_lq();
  const ShootingPoint nu{{0.9, 0.1, 0.0}, {0.05, -0.1, 1.0}, {-1.0}};
  EXPECT_EQ(os_residual(prob, nu), os_residual(prob, nu));
}

TEST(OsJacobian, MatchesFiniteDifferencesSingularLq) {
  const ProblemDef prob = build_singular_lq();
  const ShootingPoint nu{{0.9, 0.1, 0.05}, {0.05, -0.1, 1.1}, {-0.8}};
  const Matrix J = os_jacobian(prob, nu);
  EXPECT_EQ(J.cols(), static_cast<std::size_t>(2 * prob.n() + prob.d_eta()));
  const Matrix F = fd_jacobian(
      [&](const Vector& z) { return os_residual(prob, ShootingPoint::unpack(prob, z)); },
      nu.pack());
  EXPECT_LE(column_relative_error(J, F), 1e-5);
}

TEST(OsJacobian, MatchesFiniteDifferencesSirsShortHorizon) {
  const SirsShort s = sirs_short();
  const Matrix J = os_jacobian(s.prob, s.nu, s.opts);
  const Matrix F = fd_jacobian(
      [&](const Vector& z) { return os_residual(s.prob, ShootingPoint::unpack(s.prob, z), s.opts); },
      s.nu.pack());
  EXPECT_LE(column_relative_error(J, F), 1e-5);
}

TEST(TpResidual, SizeFormula) {
  const ProblemDef prob = build_lq();
  const ControlStructure& cs = sshoot::testing::lq_solution().structure;
  ASSERT_EQ(cs.N(), 3);
  // d + (N-1)(2n+1) + 2n + 2 * one entering singular component.
  EXPECT_EQ(tp_residual_size(prob, cs), 4 + 2 * 7 + 6 + 2);
  EXPECT_EQ(tp_residual(prob, cs, sshoot::testing::lq_solution().nu).size(), 26u);
}

TEST(TpResidual, ConvergedLqVanishes) {
  const SolveOutcome& s = sshoot::testing::lq_solution();
  EXPECT_LE(max_abs(tp_residual(build_lq(), s.structure, s.nu)), 1e-8);
}

TEST(TpResidual, SinglePhaseAgreesWithOs) {
  const ProblemDef prob = build_singular_lq();
  const ControlStructure cs = ControlStructure::totally_singular(1);
  const ShootingPoint os{{0.9, 0.1, 0.05}, {0.05, -0.1, 1.1}, {-0.8}};
  const TPShootingPoint tp{{os.x0}, {os.p0}, {}, os.beta};
  const Vector a = os_residual(prob, os);
  const Vector b = tp_residual(prob, cs, tp);
  ASSERT_EQ(a.size(), b.size());
  // eta and transversality rows; the anchors sit at different ends.
  for (int r = 0; r < prob.d_eta() + 2 * prob.n(); ++r)
    EXPECT_NEAR(a[r], b[r], 1e-12 * (1.0 + std::abs(a[r])));
  const ShootingPoint root = singular_lq_root();
  EXPECT_LE(max_abs(tp_residual(prob, cs, TPShootingPoint{{root.x0}, {root.p0}, {}, root.beta})),
            1e-8);
}

TEST(TpJacobian, MatchesFiniteDifferencesLq) {
  const ProblemDef prob = build_lq();
  const SolveOutcome& s = sshoot::testing::lq_solution();
  std::mt19937_64 rng(21);
  Vector z = s.nu.pack();
  const Vector dz = sshoot::testing::random_vector(rng, z.size(), 1e-3);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += dz[i];
  const int N = s.structure.N();
  const TPShootingPoint nu = TPShootingPoint::unpack(prob, N, z);
  const Matrix J = tp_jacobian(prob, s.structure, nu);
  EXPECT_EQ(J.cols(), static_cast<std::size_t>(2 * N * prob.n() + (N - 1) + prob.d_eta()));
  const Matrix F = fd_jacobian(
      [&](const Vector& w) {
        return tp_residual(prob, s.structure, TPShootingPoint::unpack(prob, N, w));
      },
      z);
  EXPECT_LE(column_relative_error(J, F), 1e-5);
}

TEST(TpJacobian, MatchesFiniteDifferencesSirs) {
  const ProblemDef prob = build_sirs();
  const SolveOutcome& s = sshoot::testing::sirs_solution();
  const int N = s.structure.N();
  const Matrix J = tp_jacobian(prob, s.structure, s.nu);
  const Matrix F = fd_jacobian(
      [&](const Vector& w) {
        return tp_residual(prob, s.structure, TPShootingPoint::unpack(prob, N, w));
      },
      s.nu.pack());
  EXPECT_LE(column_relative_error(J, F), 1e-5);
}

TEST(TpJacobian, CausalityBlocks) {
  const ProblemDef prob = build_lq();
  const SolveOutcome& s = sshoot::testing::lq_solution();
  const Matrix J = tp_jacobian(prob, s.structure, s.nu);
  const int n = prob.n(), d = prob.d_eta(), N = 3;
  // First matching block couples phases 1 and 2 only.
  for (int r = d; r < d + 2 * n; ++r)
    for (int c : {2 * n, 2 * n + 1, 2 * n + 2, N * n + 2 * n, N * n + 2 * n + 2})
      EXPECT_LE(std::abs(J(r, c)), 1e-12);
  // The first switch does not reach eta or the terminal transversality rows.
  const int col_T1 = 2 * N * n;
  for (int r = 0; r < d; ++r) EXPECT_LE(std::abs(J(r, col_T1)), 1e-12);
  const int term = d + (N - 1) * 2 * n + n;
  for (int r = term; r < term + n; ++r) EXPECT_LE(std::abs(J(r, col_T1)), 1e-12);
}

TEST(ControlStructure, ValidateRejectsBadInput) {
  const ProblemDef prob = build_lq();
  using A = ArcType;
  ControlStructure wrong_switches{{1.0}, {{A::Lower}, {A::Singular}, {A::Upper}}};
  EXPECT_THROW(wrong_switches.validate(prob), InvalidStructure);
  ControlStructure repeated{{0.5, 1.0}, {{A::Lower}, {A::Lower}, {A::Upper}}};
  EXPECT_THROW(repeated.validate(prob), InvalidStructure);
  ControlStructure unordered{{1.0, 0.5}, {{A::Lower}, {A::Singular}, {A::Upper}}};
  EXPECT_THROW(unordered.validate(prob), InvalidStructure);
  ControlStructure outside{{0.5, 2.5}, {{A::Lower}, {A::Singular}, {A::Upper}}};
  EXPECT_THROW(outside.validate(prob), InvalidStructure);
  ControlStructure ok{{0.5, 1.0}, {{A::Lower}, {A::Singular}, {A::Upper}}};
  EXPECT_NO_THROW(ok.validate(prob));
  EXPECT_EQ(ok.entering_singular(1), std::vector<int>{0});
  EXPECT_TRUE(ok.entering_singular(2).empty());
}

TEST(PhaseBounds, DegeneratePhaseThrows) {
  const ProblemDef prob = build_lq();
  EXPECT_THROW(phase_bounds(prob, {0.5, 0.5 + 1e-5}, 1e-4), StructureDegenerate);
  const Vector b = phase_bounds(prob, {0.5, 1.0}, 1e-4);
  EXPECT_EQ(b, (Vector{0.0, 0.5, 1.0, 2.0}));
}

TEST(AssembleExtremal, SinglePhaseIsRegridding) {
  const ProblemDef prob = build_singular_lq();
  const ShootingPoint root = singular_lq_root();
  const Extremal a = os_extremal(prob, root);
  const Extremal b = assemble_extremal(prob, ControlStructure::totally_singular(1),
                                       TPShootingPoint{{root.x0}, {root.p0}, {}, root.beta});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_NEAR(a.grid[q], b.grid[q], 1e-14);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(a.x[q][s], b.x[q][s], 1e-12);
  }
}

TEST(AssembleExtremal, LqArcPattern) {
  const SolveOutcome& s = sshoot::testing::lq_solution();
  const Extremal& e = s.extremal;
  EXPECT_EQ(e.grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(e.grid.back(), 2.0);
  for (std::size_t q = 1; q < e.size(); ++q) EXPECT_GE(e.grid[q], e.grid[q - 1]);
  double lo = 1.0, hi = 0.0;
  for (std::size_t q = 0; q < e.size(); ++q) {
    const double v = e.v[q][0];
    // Upper bang first, lower bang last (as the oracle finds).
    if (e.phase[q] == 0) EXPECT_EQ(v, 0.5);
    if (e.phase[q] == 2) EXPECT_EQ(v, 0.0);
    if (e.phase[q] == 1) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 0.5);
}
