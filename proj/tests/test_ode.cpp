#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "singular_shoot/models.hpp"
#include "singular_shoot/ode.hpp"

using namespace sshoot;

namespace {

// x' = 0 plus a quadratic cost component so that H_uu > 0.
struct StillModel {
  std::string name() const { return "still"; }
  ProblemDims dims() const { return {2, 1, 0, 0}; }
  template <class S>
  void field(int, std::span<const S>, std::span<const S> u, std::span<S> out) const {
    out[0] = S(0.0);
    out[1] = u[0] * u[0];
  }
  template <class S>
  S phi(std::span<const S>, std::span<const S> xT) const {
    return xT[1];
  }
  template <class S>
  void eta(std::span<const S>, std::span<const S>, std::span<S>) const {}
};

double rk4_order(const OdeRhs& f, const Vector& y0, double T, const Vector& exact, int steps) {
  auto err = [&](int s) {
    const Vector y = rk4(f, y0, 0.0, T, s).back();
    double e = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) e = std::max(e, std::abs(y[i] - exact[i]));
    return e;
  };
  return std::log2(err(steps) / err(2 * steps));
}

}  // namespace

TEST(Rk4, ExponentialAgainstRichardsonReference) {
  OdeRhs f = [](double, const Vector& y) { return Vector{y[0]}; };
  const double coarse = rk4(f, Vector{1.0}, 0.0, 1.0, 40).back()[0];
  const double fine = rk4(f, Vector{1.0}, 0.0, 1.0, 400).back()[0];
  const double fine2 = rk4(f, Vector{1.0}, 0.0, 1.0, 800).back()[0];
  const double ref = fine2 + (fine2 - fine) / 15.0;
  EXPECT_NEAR(coarse, ref, 1e-8);
  EXPECT_NEAR(ref, std::exp(1.0), 1e-14);
}

TEST(Rk4, HalvingStepReducesErrorSixteenfold) {
  OdeRhs f = [](double, const Vector& y) { return Vector{y[0]}; };
  const double e1 = std::abs(rk4(f, Vector{1.0}, 0.0, 1.0, 10).back()[0] - std::exp(1.0));
  const double e2 = std::abs(rk4(f, Vector{1.0}, 0.0, 1.0, 20).back()[0] - std::exp(1.0));
  EXPECT_GE(e1 / e2, 12.0);
  EXPECT_LE(e1 / e2, 20.0);
}

TEST(Rk4, OrderOnThreeAnalyticSystems) {
  // Exponential growth, harmonic oscillator, logistic equation.
  OdeRhs expo = [](double, const Vector& y) { return Vector{y[0]}; };
  OdeRhs osc = [](double, const Vector& y) { return Vector{y[1], -y[0]}; };
  OdeRhs logi = [](double, const Vector& y) { return Vector{y[0] * (1.0 - y[0])}; };
  const double T = 2.0;
  const double logistic_exact = 1.0 / (1.0 + 9.0 * std::exp(-T));
  for (double order : {rk4_order(expo, {1.0}, T, {std::exp(T)}, 20),
                       rk4_order(osc, {1.0, 0.0}, T, {std::cos(T), -std::sin(T)}, 20),
                       rk4_order(logi, {0.1}, T, {logistic_exact}, 10)}) {
    EXPECT_GE(order, 3.7);
    EXPECT_LE(order, 4.3);
  }
}

TEST(Rk4, StepDoublingErrorEstimateTracksTrueError) {
  OdeRhs f = [](double, const Vector& y) { return Vector{y[1], -y[0]}; };
  const double est = rk4_step_doubling_error(f, {1.0, 0.0}, 0.0, 2.0, 20);
  const Vector y = rk4(f, {1.0, 0.0}, 0.0, 2.0, 40).back();
  const double truth = std::max(std::abs(y[0] - std::cos(2.0)), std::abs(y[1] + std::sin(2.0)));
  EXPECT_GT(est, 0.3 * truth);
  EXPECT_LT(est, 3.0 * truth);
}

TEST(Integrate, ConstantSystemStaysPut) {
  const ProblemDef prob(std::make_shared<ModelAdapter<StillModel>>(StillModel{}), 1.0, {},
                        Vector{0.0, 0.0}, Vector{0.0});
  HamiltonianFlow flow{&prob, ArcSpec::all_singular(0)};
  const Vector x0{0.3, -0.2}, p0{0.0, 1.0};
  const Extremal e = integrate(flow, x0, p0, 0.0, 1.0, 8, nullptr);
  ASSERT_EQ(e.size(), 9u);
  for (std::size_t q = 0; q < e.size(); ++q) {
    EXPECT_EQ(e.x[q], x0);
    EXPECT_EQ(e.p[q], p0);
  }
  EXPECT_EQ(hamiltonian_drift(prob, e), 0.0);
}

TEST(Integrate, TooFewStepsThrows) {
  const ProblemDef prob = build_lq();
  HamiltonianFlow flow{&prob, ArcSpec{{}, Vector{0.0}}};
  EXPECT_THROW(integrate(flow, Vector{0, 0, 0}, Vector{0.5, -0.3, 1.0}, 0.0, 1.0, 3), StepsTooFew);
}

TEST(Integrate, FeedbackFailureReportsTime) {
  // p_C crosses zero so H_uu = 2 p_C loses definiteness.
  const ProblemDef prob = build_lq();
  HamiltonianFlow flow{&prob, ArcSpec{{}, Vector{0.0}}};
  try {
    integrate(flow, Vector{0, 0, 0}, Vector{0.5, -0.3, 0.0}, 0.0, 1.0, 10);
    FAIL() << "expected IntegrationFailure";
  } catch (const IntegrationFailure& e) {
    EXPECT_GE(e.time(), 0.0);
    EXPECT_NE(std::string(e.what()).find("at t ="), std::string::npos);
  }
}

TEST(Integrate, TimeReversalReturnsStart) {
  const ProblemDef prob = build_lq();
  HamiltonianFlow flow{&prob, ArcSpec{{}, Vector{0.5}}};
  const Vector x0{0.1, 0.2, 0.0}, p0{0.5, -0.3, 1.0};
  const Extremal fwd = integrate(flow, x0, p0, 0.0, 1.0, 200);
  const Extremal back = integrate(flow, fwd.x.back(), fwd.p.back(), 1.0, 0.0, 200);
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(back.x.back()[s], x0[s], 1e-7);
    EXPECT_NEAR(back.p.back()[s], p0[s], 1e-7);
  }
}

TEST(Integrate, ErrorOrderOnBangArc) {
  const ProblemDef prob = build_lq();
  HamiltonianFlow flow{&prob, ArcSpec{{}, Vector{0.5}}};
  const Vector x0{0.1, 0.2, 0.0}, p0{0.5, -0.3, 1.0};
  auto end = [&](int steps) { return integrate(flow, x0, p0, 0.0, 1.0, steps).x.back(); };
  const Vector a = end(10), b = end(20), c = end(40);
  const double order = std::log2(std::abs(a[2] - b[2]) / std::abs(b[2] - c[2]));
  EXPECT_GE(order, 3.7);
  EXPECT_LE(order, 4.3);
}

TEST(HamiltonianDrift, ConvergedLqExtremal) {
  const Extremal& e = sshoot::testing::lq_solution().extremal;
  const ProblemDef prob = build_lq();
  const double H0 = hamiltonian(prob, e.x[0], e.u[0], e.v[0], e.p[0]);
  EXPECT_LE(hamiltonian_drift(prob, e), 1e-6 * (1.0 + std::abs(H0)));
}

TEST(HamiltonianDrift, NonExtremalTrajectoryReportsNonzero) {
  const ProblemDef prob = build_lq();
  Extremal e;
  std::mt19937_64 rng(3);
  for (int q = 0; q < 5; ++q) {
    e.grid.push_back(q * 0.5);
    e.x.push_back(sshoot::testing::random_vector(rng, 3));
    e.p.push_back(sshoot::testing::random_vector(rng, 3));
    e.u.push_back(sshoot::testing::random_vector(rng, 1));
    e.v.push_back(Vector{0.2});
    e.phase.push_back(0);
  }
  e.arcs.push_back(ArcSpec{{}, Vector{0.2}});
  EXPECT_GT(hamiltonian_drift(prob, e), 0.0);
}

TEST(DenseOutput, InterpolatesNodesAndMidpoints) {
  const ProblemDef prob = build_lq();
  HamiltonianFlow flow{&prob, ArcSpec{{}, Vector{0.5}}};
  const Vector x0{0.1, 0.2, 0.0}, p0{0.5, -0.3, 1.0};
  const Extremal coarse = integrate(flow, x0, p0, 0.0, 1.0, 50);
  const Extremal fine = integrate(flow, x0, p0, 0.0, 1.0, 100);
  Vector x, p;
  dense_output(prob, coarse, coarse.grid[10], x, p);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(x[s], coarse.x[10][s], 1e-14);
  // Midpoints of the coarse grid are nodes of the fine grid.
  for (int k : {5, 21, 47}) {
    dense_output(prob, coarse, fine.grid[2 * k + 1], x, p);
    for (int s = 0; s < 3; ++s) {
      EXPECT_NEAR(x[s], fine.x[2 * k + 1][s], 1e-7);
      EXPECT_NEAR(p[s], fine.p[2 * k + 1][s], 1e-7);
    }
  }
}

TEST(IntegrateTangents, MatchesFiniteDifferencesOfFlow) {
  const ProblemDef prob = build_singular_lq();
  HamiltonianFlow flow = HamiltonianFlow::singular(prob);
  const Vector x0{1.0, 0.0, 0.0}, p0{0.2, -0.1, 1.0};
  TangentSeed seed;
  seed.dx0 = {0.3, -0.2, 0.1};
  seed.dp0 = {0.1, 0.05, -0.02};
  const TangentResult tr = integrate_tangents(flow, x0, p0, 0.0, 1.0, 100, {seed});
  const double h = 1e-6;
  auto end = [&](double eps) {
    Vector x = x0, p = p0;
    for (int s = 0; s < 3; ++s) {
      x[s] += eps * seed.dx0[s];
      p[s] += eps * seed.dp0[s];
    }
    return integrate(flow, x, p, 0.0, 1.0, 100);
  };
  const Extremal a = end(h), b = end(-h);
  for (int s = 0; s < 3; ++s) {
    const double fd = (a.x.back()[s] - b.x.back()[s]) / (2 * h);
    EXPECT_NEAR(tr.end[0].x[s].d, fd, 1e-6 * (1.0 + std::abs(fd)));
    const double fdp = (a.p.back()[s] - b.p.back()[s]) / (2 * h);
    EXPECT_NEAR(tr.end[0].p[s].d, fdp, 1e-6 * (1.0 + std::abs(fdp)));
  }
  for (int s = 0; s < 3; ++s) EXPECT_EQ(tr.values.x.back()[s], tr.end[0].x[s].v);
}
