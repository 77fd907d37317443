#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "singular_shoot/models.hpp"
#include "singular_shoot/oracle.hpp"

using namespace sshoot;

namespace {

// x' = u with running cost x^2 + u^2 carried in x2; x(0) = 1.
struct ScalarLqr {
  std::string name() const { return "scalar_lqr"; }
  ProblemDims dims() const { return {2, 1, 0, 2}; }
  template <class S>
  void field(int, std::span<const S> x, std::span<const S> u, std::span<S> out) const {
    out[0] = u[0];
    out[1] = x[0] * x[0] + u[0] * u[0];
  }
  template <class S>
  S phi(std::span<const S>, std::span<const S> xT) const {
    return xT[1];
  }
  template <class S>
  void eta(std::span<const S> x0, std::span<const S>, std::span<S> out) const {
    out[0] = x0[0] - 1.0;
    out[1] = x0[1];
  }
};

ProblemDef scalar_lqr() {
  ProblemDef prob(std::make_shared<ModelAdapter<ScalarLqr>>(ScalarLqr{}), 1.0, {},
                  Vector{1.0, 0.0}, Vector{0.0});
  prob.u_bounds = {Bounds{-5.0, 5.0}};
  return prob;
}

const OracleResult& scalar_lqr_oracle() {
  static const OracleResult r = direct_solve(scalar_lqr());
  return r;
}

std::vector<Vector> piecewise(const std::vector<double>& grid, double a, double b, double c) {
  std::vector<Vector> v;
  for (double t : grid) v.push_back(Vector{t < 2.0 / 3.0 ? a : (t < 4.0 / 3.0 ? b : c)});
  return v;
}

std::vector<double> uniform(int n, double T) {
  std::vector<double> g;
  for (int q = 0; q <= n; ++q) g.push_back(T * q / n);
  return g;
}

}  // namespace

TEST(DirectSolve, ScalarLqrWithinTwoPercentOfRiccati) {
  // Default grid_N = 200.
  // P' = P^2 - 1, P(T) = 0 gives P(t) = tanh(T - t) and optimal cost tanh(1).
  const OracleResult& r = scalar_lqr_oracle();
  const double exact = std::tanh(1.0);
  EXPECT_LE(std::abs(r.cost - exact), 0.02 * exact);
  EXPECT_EQ(r.eliminated_rows, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.eta_violation, 0.0);
}

TEST(DirectSolve, CostNonIncreasingAcrossLoopsWhenFeasible) {
  const OracleResult& r = scalar_lqr_oracle();
  ASSERT_EQ(r.loop_costs.size(), 5u);
  for (std::size_t k = 1; k < r.loop_costs.size(); ++k)
    EXPECT_LE(r.loop_costs[k], r.loop_costs[k - 1] + 1e-12);
}

TEST(DirectSolve, ControlFreeProblemIsTheRollout) {
  OracleOptions o;
  o.grid_N = 50;
  const OracleResult r = direct_solve(build_free_decay(0.5, 1.0, 1.0), o);
  EXPECT_NEAR(r.cost, std::exp(-1.0), 1e-9);
  EXPECT_NEAR(r.trajectory.x.back()[0], std::exp(-0.5), 1e-10);
  EXPECT_EQ(r.trajectory.size(), 51u);
}

TEST(DirectSolve, InvalidParams) {
  OracleOptions o;
  o.grid_N = 0;
  EXPECT_THROW(direct_solve(build_lq(), o), InvalidParams);
  // v is unbounded on the singular LQ problem.
  EXPECT_THROW(direct_solve(build_singular_lq()), InvalidParams);
}

TEST(DirectSolve, LqBangSingularBang) {
  const OracleResult& r = sshoot::testing::lq_solution().oracle;
  // Regression value of the deterministic run.
  EXPECT_NEAR(r.cost, 0.579898, 1e-5);
  EXPECT_LE(r.eta_violation, 1e-3);
  const ControlStructure cs = detect_structure(r.trajectory.grid, r.trajectory.v,
                                               build_lq().v_bounds(), 0.05, 3);
  ASSERT_EQ(cs.N(), 3);
  EXPECT_EQ(cs.phases[0][0], ArcType::Upper);
  EXPECT_EQ(cs.phases[1][0], ArcType::Singular);
  EXPECT_EQ(cs.phases[2][0], ArcType::Lower);
  // Grid nodes of the deterministic run; shooting moves them to 0.2362 and 1.0447.
  EXPECT_NEAR(cs.switch_guesses[0], 0.17, 1e-12);
  EXPECT_NEAR(cs.switch_guesses[1], 1.13, 1e-12);
}

TEST(DirectSolve, OracleBoundsShootingObjective) {
  const SolveOutcome& s = sshoot::testing::lq_solution();
  EXPECT_LE(s.objective, s.oracle.cost + 0.01 * std::abs(s.oracle.cost));
  EXPECT_NEAR(objective(build_lq(), s.extremal), s.objective, 1e-15);
}

TEST(DetectStructure, ConstantLowerBang) {
  const auto g = uniform(30, 2.0);
  const ControlStructure cs =
      detect_structure(g, std::vector<Vector>(g.size(), Vector{0.0}), {Bounds{0.0, 0.5}});
  ASSERT_EQ(cs.N(), 1);
  EXPECT_EQ(cs.phases[0][0], ArcType::Lower);
  EXPECT_TRUE(cs.switch_guesses.empty());
}

TEST(DetectStructure, ThreeThirds) {
  const auto g = uniform(300, 2.0);
  const ControlStructure cs = detect_structure(g, piecewise(g, 0.0, 0.25, 0.5), {Bounds{0.0, 0.5}});
  ASSERT_EQ(cs.N(), 3);
  EXPECT_EQ(cs.phases[0][0], ArcType::Lower);
  EXPECT_EQ(cs.phases[1][0], ArcType::Singular);
  EXPECT_EQ(cs.phases[2][0], ArcType::Upper);
  EXPECT_NEAR(cs.switch_guesses[0], 2.0 / 3.0, 0.01);
  EXPECT_NEAR(cs.switch_guesses[1], 4.0 / 3.0, 0.01);
}

TEST(DetectStructure, ShortRunsMerged) {
  const auto g = uniform(300, 2.0);
  auto v = piecewise(g, 0.0, 0.25, 0.5);
  v[50][0] = 0.5;
  v[51][0] = 0.5;
  const ControlStructure cs = detect_structure(g, v, {Bounds{0.0, 0.5}}, 0.05, 3);
  EXPECT_EQ(cs.N(), 3);
}

TEST(DetectStructure, IdempotentOnReconstruction) {
  const auto g = uniform(300, 2.0);
  const ControlStructure a = detect_structure(g, piecewise(g, 0.0, 0.31, 0.5), {Bounds{0.0, 0.5}});
  // Rebuild v from a: bounds on bang phases, the midpoint on singular ones.
  std::vector<Vector> v;
  for (double t : g) {
    int k = 0;
    while (k + 1 < a.N() && t >= a.switch_guesses[k]) ++k;
    const ArcType type = a.phases[k][0];
    v.push_back(Vector{type == ArcType::Lower ? 0.0 : (type == ArcType::Upper ? 0.5 : 0.25)});
  }
  const ControlStructure b = detect_structure(g, v, {Bounds{0.0, 0.5}});
  EXPECT_EQ(a.phases, b.phases);
  EXPECT_EQ(a.switch_guesses, b.switch_guesses);
}

TEST(DetectStructure, NoStructure) {
  const auto g = uniform(10, 1.0);
  EXPECT_THROW(detect_structure(g, std::vector<Vector>(g.size(), Vector{}), {}), NoStructure);
  EXPECT_THROW(detect_structure({}, {}, {Bounds{0.0, 1.0}}), NoStructure);
}

TEST(TpGuess, ReadsPhaseStarts) {
  const SolveOutcome& s = sshoot::testing::lq_solution();
  const ProblemDef prob = build_lq();
  std::vector<ControlGuess> guesses;
  const TPShootingPoint nu = tp_guess_from_oracle(prob, s.structure, s.oracle, &guesses);
  ASSERT_EQ(nu.x0.size(), 3u);
  ASSERT_EQ(guesses.size(), 3u);
  EXPECT_EQ(nu.switches, s.structure.switch_guesses);
  EXPECT_EQ(nu.x0[0], s.oracle.trajectory.x[0]);
  EXPECT_EQ(nu.beta.size(), 4u);
}
