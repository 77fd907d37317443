#include "singular_shoot/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

namespace {

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

ProblemDef::ProblemDef(std::shared_ptr<const VectorFieldModel> model, double T,
                       std::vector<Bounds> v_bounds, Vector sample_x, Vector sample_u,
                       double u_set_margin)
    : model_(std::move(model)),
      T_(T),
      v_bounds_(std::move(v_bounds)),
      sample_x_(std::move(sample_x)),
      sample_u_(std::move(sample_u)),
      u_set_margin_(u_set_margin) {
  if (!model_) throw InvalidParams("null model");
  dims_ = model_->dims();
  if (dims_.n < 1 || dims_.l < 0 || dims_.m < 0 || dims_.d_eta < 0)
    throw InvalidParams("bad dimensions for model " + model_->name());
  if (!(T_ > 0.0) || !std::isfinite(T_)) throw InvalidParams("horizon must be positive");
  if (u_set_margin_ < 0.0) throw InvalidParams("u_set_margin must be >= 0");
  if (v_bounds_.empty()) v_bounds_.assign(dims_.m, Bounds{});
  if (static_cast<int>(v_bounds_.size()) != dims_.m)
    throw InvalidParams("v_bounds has " + std::to_string(v_bounds_.size()) + " entries, m = " +
                        std::to_string(dims_.m));
  for (const Bounds& b : v_bounds_)
    if (!(b.lo < b.hi)) throw InvalidParams("v bound with lo >= hi");
  if (static_cast<int>(sample_x_.size()) != dims_.n ||
      static_cast<int>(sample_u_.size()) != dims_.l)
    throw InvalidParams("sample point has wrong dimension");

  // Smoke evaluation on the declared sample point.
  try {
    for (int i = 0; i <= dims_.m; ++i) {
      const Vector f = field<double>(*this, i, sample_x_, sample_u_);
      if (!finite_all(f)) throw InvalidParams("field " + std::to_string(i) + " not finite");
    }
    const double c = model_->phi(sample_x_, sample_x_);
    if (!std::isfinite(c)) throw InvalidParams("phi not finite at sample point");
    const Vector e = eta_values<double>(*this, sample_x_, sample_x_);
    if (!finite_all(e)) throw InvalidParams("eta not finite at sample point");
  } catch (const DomainError& err) {
    throw InvalidParams(std::string("smoke evaluation failed: ") + err.what());
  }
}

bool ArcSpec::is_singular(int i) const {
  return std::find(singular.begin(), singular.end(), i) != singular.end();
}

ArcSpec ArcSpec::all_singular(int m) {
  ArcSpec a;
  for (int i = 0; i < m; ++i) a.singular.push_back(i);
  a.fixed_v.assign(m, 0.0);
  return a;
}

void Extremal::validate(const ProblemDef& prob) const {
  const std::size_t k = grid.size();
  if (k < 2) throw GridMismatch("extremal needs at least two nodes");
  if (x.size() != k || p.size() != k || u.size() != k || v.size() != k || phase.size() != k)
    throw GridMismatch("extremal arrays do not share the node count");
  for (std::size_t i = 0; i < k; ++i) {
    if (static_cast<int>(x[i].size()) != prob.n() || static_cast<int>(p[i].size()) != prob.n() ||
        static_cast<int>(u[i].size()) != prob.l() || static_cast<int>(v[i].size()) != prob.m())
      throw GridMismatch("node " + std::to_string(i) + " has wrong dimensions");
    if (i > 0 && grid[i] < grid[i - 1]) throw GridMismatch("grid not increasing");
    if (phase[i] < 0 || phase[i] >= static_cast<int>(arcs.size()))
      throw GridMismatch("node phase index out of range");
  }
  if (static_cast<int>(beta.size()) != prob.d_eta()) throw GridMismatch("beta dimension");
}

Vector dynamics(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v) {
  return dynamics<double>(prob, x, u, v);
}

double hamiltonian(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p) {
  return hamiltonian<double>(prob, x, u, v, p);
}

double endpoint_lagrangian(const ProblemDef& prob, const Vector& x0, const Vector& xT,
                           const Vector& beta) {
  return endpoint_lagrangian<double>(prob, x0, xT, beta);
}

Vector costate_rhs(const ProblemDef& prob, const Vector& x, const Vector& u, const Vector& v,
                   const Vector& p) {
  return costate_rhs<double>(prob, x, u, v, p);
}

Vector transversality_residuals(const ProblemDef& prob, const Vector& x0, const Vector& xT,
                                const Vector& p0, const Vector& pT, const Vector& beta) {
  return transversality_residuals<double>(prob, x0, xT, p0, pT, beta);
}

Vector switching_function(const ProblemDef& prob, const Vector& x, const Vector& u,
                          const Vector& p) {
  return switching_function<double>(prob, x, u, p);
}

}  // namespace sshoot
