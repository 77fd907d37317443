#pragma once

#include <cstddef>
#include <vector>

#include "singular_shoot/linalg.hpp"
#include "singular_shoot/model.hpp"

namespace sshoot {

/// First and second derivatives of the dynamics and the Hamiltonian at a node.
struct NodeDerivatives {
  Matrix fx, fu, fv;  // n x n, n x l, n x m
  Matrix Hxx;         // n x n
  Matrix Hux;         // l x n
  Matrix Huu;         // l x l
  Matrix Hvx;         // m x n, row i is p D_x f_i
  Matrix Huv;         // m x l
};

NodeDerivatives node_derivatives(const ProblemDef& prob, const Vector& x, const Vector& u,
                                 const Vector& v, const Vector& p);

/// Per-node matrices of the transformed second variation. Time derivatives
/// come from the chain rule along (x', p', u').
struct GohMatrices {
  std::vector<Matrix> B, M, E, S, R, G;
  std::vector<Matrix> S_dot;
  std::vector<NodeDerivatives> d;
};

/// Throws SLCViolation where H_uu is not positive definite.
GohMatrices goh_matrices(const ProblemDef& prob, const Extremal& ext, double slc_tol = 1e-9);

/// A variation (x, u, v) on the extremal's grid.
struct Direction {
  std::vector<Vector> x, u, v;
};

struct GohDirection {
  std::vector<double> grid;
  std::vector<Vector> xi, u, y;
  Vector h;
  std::vector<Vector> x, v;  // untransformed, kept when available
};

/// y = trapezoid integral of v, xi = x - f_v y, h = y(T).
GohDirection goh_transform(const ProblemDef& prob, const Extremal& ext, const Direction& dir);

struct GohIdentityErrors {
  double err_E = 0.0;
  double err_R = 0.0;
};

/// Max over singular-arc nodes of |E + d(Hdot_v)/du| and
/// |R - E H_uu^{-1} E^T + Gamma|. R uses a fourth-order finite difference of S
/// along each phase, so err_R also measures the chain-rule S_dot. Every
/// phase needs at least five nodes on a uniform grid.
GohIdentityErrors verify_goh_identities(const ProblemDef& prob, const Extremal& ext);

/// Endpoint Hessian term plus trapezoid quadrature of the integrand.
double omega_original(const ProblemDef& prob, const Extremal& ext, const Direction& dir);

/// g(xi0, xiT, h) plus trapezoid quadrature. With include_g_term the
/// 2 v^T G y term is added using dir.v.
double omega_p2(const ProblemDef& prob, const Extremal& ext, const GohDirection& dir,
                const GohMatrices* mats = nullptr, bool include_g_term = false);

/// |xi(0)|^2 + |h|^2 + integral of |u|^2 + |y|^2.
double gamma_order(const GohDirection& dir);

struct CoercivityReport {
  double rho = 0.0;
  std::size_t node = 0;
};

/// Min over nodes of eig_min([[H_uu, E^T], [E, R]]). With singular_only the
/// minimum is taken over nodes of phases with a singular component, and R, E
/// are restricted to the singular set.
CoercivityReport coercivity_certificate(const ProblemDef& prob, const Extremal& ext,
                                        bool singular_only = false,
                                        const GohMatrices* mats = nullptr);

/// Solution of the linearized optimality system on the extremal's grid.
struct LSSolution {
  std::vector<Vector> x, u, v, p;
  Vector beta;
};

struct LQVariables {
  std::vector<Vector> chi;
  Vector chi_h;  // always zero
  Vector beta_lq;
};

struct LQSResiduals {
  double costate = 0.0;
  double stationary_u = 0.0;
  double stationary_y = 0.0;  // over nodes of singular phases only
};

struct LSMapping {
  GohDirection dir;
  LQVariables lq;
  LQSResiduals residuals;
};

/// chi = p + y^T H_vx; costate residual uses a fourth-order difference of chi.
LSMapping map_ls_to_lqs(const ProblemDef& prob, const Extremal& ext, const LSSolution& ls,
                        const GohMatrices* mats = nullptr);

/// max over nodes and pairs i < j of |p . [f_i, f_j]|.
double goh_residual(const ProblemDef& prob, const Extremal& ext);

/// Fourth-order derivative along each phase of a node-valued quantity.
/// Throws GridMismatch unless every phase has five or more uniformly spaced nodes.
std::vector<Matrix> phase_derivative(const Extremal& ext, const std::vector<Matrix>& values);

}  // namespace sshoot
