#pragma once

#include <functional>
#include <vector>

#include "singular_shoot/lie.hpp"
#include "singular_shoot/model.hpp"

namespace sshoot {

/// The state-costate system with controls in feedback form. On a phase of a
/// multi-phase problem `scale` is the phase duration and time runs over [0, 1].
struct HamiltonianFlow {
  const ProblemDef* prob = nullptr;
  ArcSpec arc;
  double scale = 1.0;
  FeedbackOptions feedback;

  /// Flow with every affine component singular.
  static HamiltonianFlow singular(const ProblemDef& prob, double scale = 1.0);
};

/// Starting guess for the feedback Newton iteration at the first node.
struct ControlGuess {
  Vector u;
  Vector v_sing;
};

/// RK4 over [t0, t1] with `steps` uniform steps; controls are recomputed at
/// every stage and stored at every node. Throws StepsTooFew if steps < 4 and
/// IntegrationFailure (with the time) if the feedback solve fails.
Extremal integrate(const HamiltonianFlow& flow, const Vector& x0, const Vector& p0, double t0,
                   double t1, int steps, const ControlGuess* guess = nullptr);

/// Direction in (x0, p0, scale) along which tangents are propagated.
struct TangentSeed {
  Vector dx0, dp0;
  double dscale = 0.0;
};

/// State, costate and controls (v full length m) at one node.
template <class S>
struct Node {
  std::vector<S> x, p, u, v;
};
using NodeDual = Node<D1>;

struct TangentResult {
  Extremal values;
  std::vector<NodeDual> start, end;  // one entry per seed
  std::vector<std::vector<NodeDual>> path;  // path[node][seed] when recorded
};

/// Integrates values and all seeds in lockstep. Controls' tangents come from
/// the implicit function theorem on the feedback residual at every stage.
TangentResult integrate_tangents(const HamiltonianFlow& flow, const Vector& x0, const Vector& p0,
                                 double t0, double t1, int steps,
                                 const std::vector<TangentSeed>& seeds,
                                 const ControlGuess* guess = nullptr,
                                 bool record_path = false);

/// max over nodes of |H(t) - H(0)| using the stored controls.
double hamiltonian_drift(const ProblemDef& prob, const Extremal& seg);

/// Cubic Hermite interpolation of (x, p) at time t, derivatives rebuilt from
/// the stored controls. Nodes sharing a time (phase switches) are handled by
/// choosing the interval that contains t with positive length.
void dense_output(const ProblemDef& prob, const Extremal& seg, double t, Vector& x, Vector& p);

// Plain RK4 on y' = f(t, y), used by the order checks.
using OdeRhs = std::function<Vector(double, const Vector&)>;
std::vector<Vector> rk4(const OdeRhs& f, const Vector& y0, double t0, double t1, int steps);
/// Step-doubling estimate |y_h(t1) - y_{h/2}(t1)| / 15 of the global error.
double rk4_step_doubling_error(const OdeRhs& f, const Vector& y0, double t0, double t1, int steps);

}  // namespace sshoot
