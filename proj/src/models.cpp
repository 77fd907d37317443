#include "singular_shoot/models.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

void SIRSParams::validate() const {
  const double all[] = {N0, S0, I0, alpha, K, mu, beta, omega, gamma, delta, B1, B2, B3, v_max, T};
  for (double a : all)
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidParams("SIRS parameters must be positive");
  if (S0 + I0 > N0) throw InvalidParams("S0 + I0 exceeds N0");
}

ProblemDef build_sirs(const SIRSParams& params) {
  params.validate();
  auto model = std::make_shared<ModelAdapter<SIRSModel>>(SIRSModel{params});
  ProblemDef prob(model, params.T, {Bounds{0.0, params.v_max}},
                  {params.N0, params.S0, params.I0, 0.0}, {0.0});
  prob.u_bounds = {Bounds{-1.0, 2.0}};
  return prob;
}

ProblemDef build_lq(const LQParams& params) {
  if (!(params.T > 0.0) || !(params.v_lo < params.v_hi))
    throw InvalidParams("LQ horizon or bounds invalid");
  auto model = std::make_shared<ModelAdapter<LQModel>>(LQModel{params});
  ProblemDef prob(model, params.T, {Bounds{params.v_lo, params.v_hi}},
                  {params.x1_0, params.x2_0, 0.0}, {0.0});
  prob.u_bounds = {Bounds{-5.0, 5.0}};
  return prob;
}

ProblemDef build_singular_lq() {
  auto model = std::make_shared<ModelAdapter<SingularLQModel>>(SingularLQModel{});
  ProblemDef prob(model, 1.0, {Bounds{}}, {1.0, 0.0, 0.0}, {0.0});
  prob.u_bounds = {Bounds{-5.0, 5.0}};
  return prob;
}

ProblemDef build_free_decay(double rate, double x0, double T) {
  auto model = std::make_shared<ModelAdapter<FreeDecayModel>>(FreeDecayModel{rate, x0});
  return ProblemDef(model, T, {}, {x0}, {});
}

namespace {

struct SirsPoint {
  double N, S, I, pN, pS, pI, pC;
};

SirsPoint sirs_point(const SIRSParams& prm, const Vector& x, const Vector& p) {
  if (x.size() != 4 || p.size() != 4) throw DimensionMismatch("SIRS state/costate has 4 entries");
  SirsPoint q{x[0], x[1], x[2], p[0], p[1], p[2], p[3]};
  const double eps = 1e-12;
  if (std::abs(q.pI) < eps || std::abs(q.pS) < eps || std::abs(q.S) < eps ||
      std::abs(q.I) < eps || std::abs(q.N) < eps || std::abs(q.pC) < eps)
    throw DegeneratePoint("p_I, p_S, p_C, S, I or N vanishes");
  if (prm.omega == 0.0 && std::abs(q.I) < 1e-8) throw DegeneratePoint("omega = 0 and I -> 0");
  return q;
}

double closed_form(const SIRSParams& prm, const Vector& x, const Vector& p, bool mortality) {
  const SirsPoint q = sirs_point(prm, x, p);
  const double F = prm.alpha * q.N * (1.0 - q.N / prm.K);
  const double Fp = prm.alpha * (1.0 - 2.0 * q.N / prm.K);
  const double u = q.pI * q.I / (2.0 * prm.B3 * q.pC);
  const double b = prm.beta, om = prm.omega, de = prm.delta, ga = prm.gamma, mu = prm.mu;

  const double w1[4] = {de, 2.0 * om + b * q.S / q.N,
                        -(F - de * q.I) / q.N + 2.0 * b * q.I / q.N * q.pI / q.pS, -prm.B1};
  double w22;
  if (mortality) {
    w22 = -(Fp + om) * (F - de * q.I - mu * q.N) - om * q.I * (de + ga + u + mu) -
          mu * (F + om * (q.N - q.I));
  } else {
    w22 = -(Fp + om) * (F - de * q.I) - om * q.I * (de + ga + u);
  }
  const double pv[4] = {q.pN, q.pS, q.pI, q.pC};
  double pw = 0.0;
  for (int k = 0; k < 4; ++k) pw += pv[k] * w1[k];
  pw += q.pS * q.N / (b * q.S * q.I) * w22;
  return -(om + b * q.I / q.N) + pw / (2.0 * q.pI);
}

}  // namespace

double sirs_singular_v_closed_form(const SIRSParams& params, const Vector& x, const Vector& p) {
  return closed_form(params, x, p, true);
}

double sirs_singular_v_printed(const SIRSParams& params, const Vector& x, const Vector& p) {
  return closed_form(params, x, p, false);
}

double sirs_treatment_feedback(const SIRSParams& params, const Vector& x, const Vector& p) {
  if (p.size() != 4 || x.size() != 4) throw DimensionMismatch("SIRS state/costate has 4 entries");
  if (std::abs(p[3]) < 1e-12) throw DegeneratePoint("p_C vanishes");
  return p[2] * x[2] / (2.0 * params.B3 * p[3]);
}

bool check_nonneg_treatment(const Extremal& ext) {
  for (const Vector& u : ext.u)
    for (double a : u)
      if (a < -1e-8) return false;
  return true;
}

std::vector<std::string> registered_models() {
  return {"sirs", "degenerate_lq", "singular_lq", "free_decay"};
}

namespace {

using Setter = std::function<void(double)>;

void apply(const std::map<std::string, double>& params,
           const std::map<std::string, Setter>& setters, const std::string& model) {
  for (const auto& [k, val] : params) {
    auto it = setters.find(k);
    if (it == setters.end()) throw InvalidParams("unknown parameter '" + k + "' for " + model);
    it->second(val);
  }
}

}  // namespace

ProblemDef build_registered(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "sirs") {
    SIRSParams s;
    apply(params,
          {{"N0", [&](double a) { s.N0 = a; }},      {"S0", [&](double a) { s.S0 = a; }},
           {"I0", [&](double a) { s.I0 = a; }},      {"alpha", [&](double a) { s.alpha = a; }},
           {"K", [&](double a) { s.K = a; }},        {"mu", [&](double a) { s.mu = a; }},
           {"beta", [&](double a) { s.beta = a; }},  {"omega", [&](double a) { s.omega = a; }},
           {"gamma", [&](double a) { s.gamma = a; }}, {"delta", [&](double a) { s.delta = a; }},
           {"B1", [&](double a) { s.B1 = a; }},      {"B2", [&](double a) { s.B2 = a; }},
           {"B3", [&](double a) { s.B3 = a; }},      {"v_max", [&](double a) { s.v_max = a; }},
           {"T", [&](double a) { s.T = a; }}},
          name);
    return build_sirs(s);
  }
  if (name == "degenerate_lq") {
    LQParams q;
    apply(params,
          {{"T", [&](double a) { q.T = a; }},         {"v_lo", [&](double a) { q.v_lo = a; }},
           {"v_hi", [&](double a) { q.v_hi = a; }},   {"x1_T", [&](double a) { q.x1_T = a; }},
           {"x1_0", [&](double a) { q.x1_0 = a; }},   {"x2_0", [&](double a) { q.x2_0 = a; }},
           {"w_x1", [&](double a) { q.w_x1 = a; }},   {"w_x2", [&](double a) { q.w_x2 = a; }},
           {"w_u", [&](double a) { q.w_u = a; }},     {"w_x2v", [&](double a) { q.w_x2v = a; }},
           {"terminal", [&](double a) { q.terminal = a; }}},
          name);
    return build_lq(q);
  }
  if (name == "singular_lq") {
    apply(params, {}, name);
    return build_singular_lq();
  }
  if (name == "free_decay") {
    double rate = 0.5, x0 = 1.0, T = 1.0;
    apply(params,
          {{"rate", [&](double a) { rate = a; }},
           {"x0", [&](double a) { x0 = a; }},
           {"T", [&](double a) { T = a; }}},
          name);
    return build_free_decay(rate, x0, T);
  }
  throw InvalidParams("unknown model '" + name + "'");
}

}  // namespace sshoot
