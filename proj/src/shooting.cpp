#include "singular_shoot/shooting.hpp"

#include <cmath>
#include <string>

#include "singular_shoot/errors.hpp"

namespace sshoot {

Vector ShootingPoint::pack() const {
  Vector nu = x0;
  nu.insert(nu.end(), p0.begin(), p0.end());
  nu.insert(nu.end(), beta.begin(), beta.end());
  return nu;
}

ShootingPoint ShootingPoint::unpack(const ProblemDef& prob, std::span<const double> nu) {
  const std::size_t n = prob.n(), d = prob.d_eta();
  if (nu.size() != 2 * n + d) throw DimensionMismatch("shooting point has wrong length");
  ShootingPoint s;
  s.x0.assign(nu.begin(), nu.begin() + n);
  s.p0.assign(nu.begin() + n, nu.begin() + 2 * n);
  s.beta.assign(nu.begin() + 2 * n, nu.end());
  return s;
}

void ControlStructure::validate(const ProblemDef& prob) const {
  const int N = this->N();
  if (N < 1) throw InvalidStructure("structure needs at least one phase");
  if (static_cast<int>(switch_guesses.size()) != N - 1)
    throw InvalidStructure("need N - 1 switch guesses");
  for (const auto& ph : phases)
    if (static_cast<int>(ph.size()) != prob.m())
      throw InvalidStructure("every phase needs one arc type per affine control");
  for (int k = 0; k + 1 < N; ++k)
    if (phases[k] == phases[k + 1]) throw InvalidStructure("adjacent phases are identical");
  double prev = 0.0;
  for (double t : switch_guesses) {
    if (!(t > prev) || !(t < prob.T()))
      throw InvalidStructure("switch guesses must increase strictly inside (0, T)");
    prev = t;
  }
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < prob.m(); ++i) {
      if (phases[k][i] == ArcType::Singular) continue;
      const Bounds& b = prob.v_bounds()[i];
      const double val = phases[k][i] == ArcType::Lower ? b.lo : b.hi;
      if (!std::isfinite(val)) throw InvalidStructure("bang arc on an unbounded component");
    }
}

ArcSpec ControlStructure::arc(const ProblemDef& prob, int k) const {
  ArcSpec a;
  a.fixed_v.assign(prob.m(), 0.0);
  for (int i = 0; i < prob.m(); ++i) {
    switch (phases[k][i]) {
      case ArcType::Singular: a.singular.push_back(i); break;
      case ArcType::Lower: a.fixed_v[i] = prob.v_bounds()[i].lo; break;
      case ArcType::Upper: a.fixed_v[i] = prob.v_bounds()[i].hi; break;
    }
  }
  return a;
}

std::vector<int> ControlStructure::entering_singular(int k) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < phases[k].size(); ++i)
    if (phases[k][i] == ArcType::Singular && (k == 0 || phases[k - 1][i] != ArcType::Singular))
      out.push_back(static_cast<int>(i));
  return out;
}

ControlStructure ControlStructure::totally_singular(int m) {
  ControlStructure cs;
  cs.phases = {std::vector<ArcType>(m, ArcType::Singular)};
  return cs;
}

Vector TPShootingPoint::pack() const {
  Vector nu;
  for (const Vector& a : x0) nu.insert(nu.end(), a.begin(), a.end());
  for (const Vector& a : p0) nu.insert(nu.end(), a.begin(), a.end());
  nu.insert(nu.end(), switches.begin(), switches.end());
  nu.insert(nu.end(), beta.begin(), beta.end());
  return nu;
}

TPShootingPoint TPShootingPoint::unpack(const ProblemDef& prob, int N,
                                        std::span<const double> nu) {
  const std::size_t n = prob.n(), d = prob.d_eta();
  if (N < 1 || nu.size() != 2 * N * n + (N - 1) + d)
    throw DimensionMismatch("TP shooting point has wrong length");
  TPShootingPoint s;
  auto it = nu.begin();
  for (int k = 0; k < N; ++k, it += n) s.x0.emplace_back(it, it + n);
  for (int k = 0; k < N; ++k, it += n) s.p0.emplace_back(it, it + n);
  s.switches.assign(it, it + (N - 1));
  it += N - 1;
  s.beta.assign(it, nu.end());
  return s;
}

Vector phase_bounds(const ProblemDef& prob, const Vector& switches, double min_phase_fraction) {
  Vector b{0.0};
  b.insert(b.end(), switches.begin(), switches.end());
  b.push_back(prob.T());
  const double min_phase = min_phase_fraction * prob.T();
  for (std::size_t k = 0; k + 1 < b.size(); ++k)
    if (!(b[k + 1] - b[k] >= min_phase))
      throw StructureDegenerate("phase " + std::to_string(k + 1) + " shorter than " +
                                std::to_string(min_phase));
  return b;
}

namespace {

template <class S>
Node<S> node_at(const Extremal& seg, std::size_t i) {
  return {lift_vec<S>(seg.x[i]), lift_vec<S>(seg.p[i]), lift_vec<S>(seg.u[i]),
          lift_vec<S>(seg.v[i])};
}

template <class S>
void append(std::vector<S>& r, const std::vector<S>& a) {
  r.insert(r.end(), a.begin(), a.end());
}

template <class S>
std::vector<S> os_rows(const ProblemDef& prob, const Node<S>& a, const Node<S>& b,
                       const std::vector<S>& beta) {
  std::vector<S> r = eta_values<S>(prob, a.x, b.x);
  append(r, transversality_residuals<S>(prob, a.x, b.x, a.p, b.p, beta));
  append(r, switching_function<S>(prob, b.x, b.u, b.p));
  const Vector zero(prob.m(), 0.0);
  append(r, hv_dot_drift<S>(prob, zero, a.x, a.u, a.p));
  return r;
}

template <class S>
std::vector<S> tp_rows(const ProblemDef& prob, const ControlStructure& cs,
                       const std::vector<ArcSpec>& arcs, const std::vector<Node<S>>& starts,
                       const std::vector<Node<S>>& ends, const std::vector<S>& beta) {
  const int N = cs.N(), n = prob.n();
  std::vector<S> r = eta_values<S>(prob, starts[0].x, ends[N - 1].x);
  for (int k = 0; k + 1 < N; ++k) {
    for (int s = 0; s < n; ++s) r.push_back(ends[k].x[s] - starts[k + 1].x[s]);
    for (int s = 0; s < n; ++s) r.push_back(ends[k].p[s] - starts[k + 1].p[s]);
  }
  append(r, transversality_residuals<S>(prob, starts[0].x, ends[N - 1].x, starts[0].p,
                                        ends[N - 1].p, beta));
  for (int k = 0; k + 1 < N; ++k) {
    const Node<S>& e = ends[k];
    const Node<S>& s = starts[k + 1];
    r.push_back(hamiltonian<S>(prob, e.x, e.u, e.v, e.p) -
                hamiltonian<S>(prob, s.x, s.u, s.v, s.p));
  }
  for (int k = 0; k < N; ++k) {
    const std::vector<int> ent = cs.entering_singular(k);
    if (ent.empty()) continue;
    const Node<S>& s = starts[k];
    const std::vector<S> hv = switching_function<S>(prob, s.x, s.u, s.p);
    const std::vector<S> hvd = hv_dot_drift<S>(prob, arcs[k].fixed_v, s.x, s.u, s.p);
    for (int i : ent) {
      r.push_back(hv[i]);
      r.push_back(hvd[i]);
    }
  }
  return r;
}

Node<D1> scaled(const Node<D1>& a, double f) {
  Node<D1> b = a;
  for (auto* vec : {&b.x, &b.p, &b.u, &b.v})
    for (D1& z : *vec) z.d *= f;
  return b;
}

const ControlGuess* guess_for(const ShootingOptions& opts, int k) {
  return k < static_cast<int>(opts.guesses.size()) ? &opts.guesses[k] : nullptr;
}

HamiltonianFlow make_flow(const ProblemDef& prob, const ArcSpec& arc, double scale,
                          const ShootingOptions& opts) {
  HamiltonianFlow flow;
  flow.prob = &prob;
  flow.arc = arc;
  flow.scale = scale;
  flow.feedback = opts.feedback;
  return flow;
}

void check_os(const ProblemDef& prob, const ShootingPoint& nu) {
  if (static_cast<int>(nu.x0.size()) != prob.n() || static_cast<int>(nu.p0.size()) != prob.n() ||
      static_cast<int>(nu.beta.size()) != prob.d_eta())
    throw DimensionMismatch("shooting point dimensions");
}

void check_tp(const ProblemDef& prob, const ControlStructure& cs, const TPShootingPoint& nu) {
  const std::size_t N = cs.N();
  if (nu.x0.size() != N || nu.p0.size() != N || nu.switches.size() != N - 1 ||
      static_cast<int>(nu.beta.size()) != prob.d_eta())
    throw DimensionMismatch("TP shooting point does not match the structure");
  for (std::size_t k = 0; k < N; ++k)
    if (static_cast<int>(nu.x0[k].size()) != prob.n() ||
        static_cast<int>(nu.p0[k].size()) != prob.n())
      throw DimensionMismatch("TP phase state/costate dimension");
}

std::vector<ArcSpec> phase_arcs(const ProblemDef& prob, const ControlStructure& cs) {
  std::vector<ArcSpec> arcs;
  for (int k = 0; k < cs.N(); ++k) arcs.push_back(cs.arc(prob, k));
  return arcs;
}

}  // namespace

Extremal os_extremal(const ProblemDef& prob, const ShootingPoint& nu, const ShootingOptions& opts) {
  check_os(prob, nu);
  const HamiltonianFlow flow = make_flow(prob, ArcSpec::all_singular(prob.m()), 1.0, opts);
  Extremal ext = integrate(flow, nu.x0, nu.p0, 0.0, prob.T(), opts.steps, guess_for(opts, 0));
  ext.beta = nu.beta;
  return ext;
}

Vector os_residual(const ProblemDef& prob, const ShootingPoint& nu, const ShootingOptions& opts) {
  const Extremal ext = os_extremal(prob, nu, opts);
  return os_rows<double>(prob, node_at<double>(ext, 0), node_at<double>(ext, ext.size() - 1),
                         nu.beta);
}

Matrix os_jacobian(const ProblemDef& prob, const ShootingPoint& nu, const ShootingOptions& opts) {
  check_os(prob, nu);
  const int n = prob.n(), d = prob.d_eta();
  std::vector<TangentSeed> seeds(2 * n);
  for (int c = 0; c < 2 * n; ++c) {
    seeds[c].dx0.assign(n, 0.0);
    seeds[c].dp0.assign(n, 0.0);
    (c < n ? seeds[c].dx0[c] : seeds[c].dp0[c - n]) = 1.0;
  }
  const HamiltonianFlow flow = make_flow(prob, ArcSpec::all_singular(prob.m()), 1.0, opts);
  const TangentResult tr =
      integrate_tangents(flow, nu.x0, nu.p0, 0.0, prob.T(), opts.steps, seeds, guess_for(opts, 0));
  const Extremal& ext = tr.values;
  const Node<D1> a0 = node_at<D1>(ext, 0), b0 = node_at<D1>(ext, ext.size() - 1);
  const std::vector<D1> beta0 = lift_vec<D1>(nu.beta);

  const int rows = d + 2 * n + 2 * prob.m();
  Matrix J(rows, 2 * n + d, 0.0);
  for (int c = 0; c < 2 * n + d; ++c) {
    std::vector<D1> col;
    if (c < 2 * n) {
      col = os_rows<D1>(prob, tr.start[c], tr.end[c], beta0);
    } else {
      col = os_rows<D1>(prob, a0, b0, seed_unit<double>(nu.beta, c - 2 * n));
    }
    for (int r = 0; r < rows; ++r) J(r, c) = col[r].d;
  }
  return J;
}

int tp_residual_size(const ProblemDef& prob, const ControlStructure& cs) {
  int anchors = 0;
  for (int k = 0; k < cs.N(); ++k) anchors += static_cast<int>(cs.entering_singular(k).size());
  return prob.d_eta() + (cs.N() - 1) * (2 * prob.n() + 1) + 2 * prob.n() + 2 * anchors;
}

Vector tp_residual(const ProblemDef& prob, const ControlStructure& cs, const TPShootingPoint& nu,
                   const ShootingOptions& opts) {
  check_tp(prob, cs, nu);
  const Vector b = phase_bounds(prob, nu.switches, opts.min_phase_fraction);
  const std::vector<ArcSpec> arcs = phase_arcs(prob, cs);
  std::vector<Node<double>> starts, ends;
  for (int k = 0; k < cs.N(); ++k) {
    const HamiltonianFlow flow = make_flow(prob, arcs[k], b[k + 1] - b[k], opts);
    const Extremal seg =
        integrate(flow, nu.x0[k], nu.p0[k], 0.0, 1.0, opts.steps, guess_for(opts, k));
    starts.push_back(node_at<double>(seg, 0));
    ends.push_back(node_at<double>(seg, seg.size() - 1));
  }
  return tp_rows<double>(prob, cs, arcs, starts, ends, nu.beta);
}

Matrix tp_jacobian(const ProblemDef& prob, const ControlStructure& cs, const TPShootingPoint& nu,
                   const ShootingOptions& opts) {
  check_tp(prob, cs, nu);
  const int N = cs.N(), n = prob.n(), d = prob.d_eta();
  const Vector b = phase_bounds(prob, nu.switches, opts.min_phase_fraction);
  const std::vector<ArcSpec> arcs = phase_arcs(prob, cs);

  // Seeds per phase: x0 units, p0 units, scale.
  std::vector<TangentSeed> seeds(2 * n + 1);
  for (int c = 0; c < 2 * n; ++c) {
    seeds[c].dx0.assign(n, 0.0);
    seeds[c].dp0.assign(n, 0.0);
    (c < n ? seeds[c].dx0[c] : seeds[c].dp0[c - n]) = 1.0;
  }
  seeds[2 * n].dscale = 1.0;

  std::vector<TangentResult> tr;
  std::vector<Node<D1>> starts0, ends0;
  for (int k = 0; k < N; ++k) {
    const HamiltonianFlow flow = make_flow(prob, arcs[k], b[k + 1] - b[k], opts);
    tr.push_back(integrate_tangents(flow, nu.x0[k], nu.p0[k], 0.0, 1.0, opts.steps, seeds,
                                    guess_for(opts, k)));
    const Extremal& seg = tr.back().values;
    starts0.push_back(node_at<D1>(seg, 0));
    ends0.push_back(node_at<D1>(seg, seg.size() - 1));
  }
  const std::vector<D1> beta0 = lift_vec<D1>(nu.beta);

  const int rows = tp_residual_size(prob, cs);
  const int cols = 2 * N * n + (N - 1) + d;
  Matrix J(rows, cols, 0.0);
  auto store = [&](int c, const std::vector<D1>& col) {
    for (int r = 0; r < rows; ++r) J(r, c) = col[r].d;
  };
  for (int k = 0; k < N; ++k)
    for (int s = 0; s < 2 * n; ++s) {
      std::vector<Node<D1>> st = starts0, en = ends0;
      st[k] = tr[k].start[s];
      en[k] = tr[k].end[s];
      const int c = s < n ? k * n + s : N * n + k * n + (s - n);
      store(c, tp_rows<D1>(prob, cs, arcs, st, en, beta0));
    }
  // T_j lengthens phase j-1 and shortens phase j.
  for (int j = 0; j + 1 < N; ++j) {
    std::vector<Node<D1>> st = starts0, en = ends0;
    st[j] = tr[j].start[2 * n];
    en[j] = tr[j].end[2 * n];
    st[j + 1] = scaled(tr[j + 1].start[2 * n], -1.0);
    en[j + 1] = scaled(tr[j + 1].end[2 * n], -1.0);
    store(2 * N * n + j, tp_rows<D1>(prob, cs, arcs, st, en, beta0));
  }
  for (int q = 0; q < d; ++q)
    store(2 * N * n + (N - 1) + q,
          tp_rows<D1>(prob, cs, arcs, starts0, ends0, seed_unit<double>(nu.beta, q)));
  return J;
}

Extremal assemble_extremal(const ProblemDef& prob, const ControlStructure& cs,
                           const TPShootingPoint& nu, const ShootingOptions& opts) {
  check_tp(prob, cs, nu);
  const Vector b = phase_bounds(prob, nu.switches, opts.min_phase_fraction);
  Extremal ext;
  ext.beta = nu.beta;
  for (int k = 0; k < cs.N(); ++k) {
    const ArcSpec arc = cs.arc(prob, k);
    const double c = b[k + 1] - b[k];
    const HamiltonianFlow flow = make_flow(prob, arc, c, opts);
    const Extremal seg =
        integrate(flow, nu.x0[k], nu.p0[k], 0.0, 1.0, opts.steps, guess_for(opts, k));
    for (std::size_t i = 0; i < seg.size(); ++i) {
      ext.grid.push_back(i + 1 == seg.size() ? b[k + 1] : b[k] + c * seg.grid[i]);
      ext.x.push_back(seg.x[i]);
      ext.p.push_back(seg.p[i]);
      ext.u.push_back(seg.u[i]);
      ext.v.push_back(seg.v[i]);
      ext.phase.push_back(k);
    }
    ext.arcs.push_back(arc);
  }
  return ext;
}

}  // namespace sshoot
