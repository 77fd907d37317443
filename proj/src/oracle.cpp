#include "singular_shoot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "singular_shoot/autodiff.hpp"
#include "singular_shoot/errors.hpp"

namespace sshoot {

namespace {

template <class S>
std::vector<S> rk4_interval(const ProblemDef& prob, std::vector<S> x, const std::vector<S>& u,
                            const std::vector<S>& v, double h, int substeps) {
  const double dt = h / substeps;
  auto f = [&](const std::vector<S>& y) { return dynamics<S>(prob, y, u, v); };
  auto shift = [](const std::vector<S>& y, double a, const std::vector<S>& k) {
    std::vector<S> r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * k[i];
    return r;
  };
  for (int s = 0; s < substeps; ++s) {
    const std::vector<S> k1 = f(x);
    const std::vector<S> k2 = f(shift(x, 0.5 * dt, k1));
    const std::vector<S> k3 = f(shift(x, 0.5 * dt, k2));
    const std::vector<S> k4 = f(shift(x, dt, k3));
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return x;
}

class Transcription {
 public:
  Transcription(const ProblemDef& prob, const OracleOptions& opts)
      : prob_(prob), N_(opts.grid_N), sub_(opts.substeps), h_(prob.T() / opts.grid_N) {
    find_eliminations();
    nc_ = prob.l() + prob.m();
    lo_.assign(free_.size(), -std::numeric_limits<double>::infinity());
    hi_.assign(free_.size(), std::numeric_limits<double>::infinity());
    for (int k = 0; k < N_; ++k) {
      for (int a = 0; a < prob.l(); ++a) {
        lo_.push_back(prob.u_bounds[a].lo);
        hi_.push_back(prob.u_bounds[a].hi);
      }
      for (int i = 0; i < prob.m(); ++i) {
        lo_.push_back(prob.v_bounds()[i].lo);
        hi_.push_back(prob.v_bounds()[i].hi);
      }
    }
  }

  std::size_t size() const { return lo_.size(); }
  const std::vector<int>& eliminated() const { return elim_rows_; }
  const std::vector<int>& penalized() const { return penal_rows_; }
  void set_weight(double w) { w_ = w; }

  Vector project(Vector z) const {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i], lo_[i], hi_[i]);
    return z;
  }

  Vector initial(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    Vector z;
    for (int i : free_) z.push_back(prob_.sample_x()[i]);
    for (int k = 0; k < N_; ++k) {
      for (int a = 0; a < prob_.l(); ++a) z.push_back(prob_.sample_u()[a]);
      for (int i = 0; i < prob_.m(); ++i) {
        const Bounds& b = prob_.v_bounds()[i];
        z.push_back(0.5 * (b.lo + b.hi) + 0.01 * (b.hi - b.lo) * noise(rng));
      }
    }
    return project(z);
  }

  Vector x0(const Vector& z) const {
    Vector x = fixed_x0_;
    for (std::size_t j = 0; j < free_.size(); ++j) x[free_[j]] = z[j];
    return x;
  }

  void controls(const Vector& z, int k, Vector& u, Vector& v) const {
    const std::size_t base = free_.size() + static_cast<std::size_t>(k) * nc_;
    u.assign(z.begin() + base, z.begin() + base + prob_.l());
    v.assign(z.begin() + base + prob_.l(), z.begin() + base + nc_);
  }

  // Penalized objective and optionally the node states.
  double value(const Vector& z, std::vector<Vector>* xs = nullptr) const {
    Vector x = x0(z), u, v;
    if (xs) xs->assign(1, x);
    for (int k = 0; k < N_; ++k) {
      controls(z, k, u, v);
      x = rk4_interval<double>(prob_, x, u, v, h_, sub_);
      if (xs) xs->push_back(x);
    }
    return endpoint<double>(x0(z), x);
  }

  // Gradient by the discrete adjoint; lambdas[k] is dJ/dx_k.
  double gradient(const Vector& z, Vector& g, std::vector<Vector>* xs_out = nullptr,
                  std::vector<Vector>* lambdas = nullptr) const {
    std::vector<Vector> xs;
    const double J = value(z, &xs);
    const int n = prob_.n();
    Vector z0(2 * n);
    const Vector x0v = x0(z);
    std::copy(x0v.begin(), x0v.end(), z0.begin());
    std::copy(xs.back().begin(), xs.back().end(), z0.begin() + n);
    const Vector gend = sshoot::gradient(
        [&](const std::vector<D1>& w) {
          return endpoint<D1>(std::vector<D1>(w.begin(), w.begin() + n),
                              std::vector<D1>(w.begin() + n, w.end()));
        },
        z0);
    g.assign(z.size(), 0.0);
    Vector lam(gend.begin() + n, gend.end());
    if (lambdas) lambdas->assign(N_ + 1, Vector());
    if (lambdas) (*lambdas)[N_] = lam;
    Vector u, v;
    for (int k = N_ - 1; k >= 0; --k) {
      controls(z, k, u, v);
      Vector arg = xs[k];
      arg.insert(arg.end(), u.begin(), u.end());
      arg.insert(arg.end(), v.begin(), v.end());
      const Matrix Jk = jacobian(
          [&](const std::vector<D1>& w) {
            std::vector<D1> xw(w.begin(), w.begin() + n);
            std::vector<D1> uw(w.begin() + n, w.begin() + n + prob_.l());
            std::vector<D1> vw(w.begin() + n + prob_.l(), w.end());
            return rk4_interval<D1>(prob_, xw, uw, vw, h_, sub_);
          },
          arg);
      Vector next(n, 0.0);
      const std::size_t base = free_.size() + static_cast<std::size_t>(k) * nc_;
      for (std::size_t c = 0; c < arg.size(); ++c) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) s += lam[r] * Jk(r, c);
        if (c < static_cast<std::size_t>(n))
          next[c] = s;
        else
          g[base + c - n] = s;
      }
      lam = next;
      if (lambdas) (*lambdas)[k] = lam;
    }
    dJdx0_ = lam;
    for (int s = 0; s < n; ++s) dJdx0_[s] += gend[s];
    for (std::size_t j = 0; j < free_.size(); ++j) g[j] = dJdx0_[free_[j]];
    if (xs_out) *xs_out = std::move(xs);
    return J;
  }

  // Multipliers: 2 w eta on penalized rows, from p(0) on eliminated rows.
  Vector multipliers(const Vector& x0v, const Vector& xT) const {
    Vector beta(prob_.d_eta(), 0.0);
    const Vector e = eta_values<double>(prob_, x0v, xT);
    for (int j : penal_rows_) beta[j] = 2.0 * w_ * e[j];
    for (std::size_t q = 0; q < elim_rows_.size(); ++q)
      beta[elim_rows_[q]] = -elim_sign_[q] * dJdx0_[elim_idx_[q]];
    return beta;
  }

  double violation(const Vector& x0v, const Vector& xT) const {
    const Vector e = eta_values<double>(prob_, x0v, xT);
    double m = 0.0;
    for (int j : penal_rows_) m = std::max(m, std::abs(e[j]));
    return m;
  }

  double phi(const Vector& x0v, const Vector& xT) const {
    return prob_.model().phi(std::span<const double>(x0v), std::span<const double>(xT));
  }

  double h() const { return h_; }

 private:
  template <class S>
  S endpoint(const std::vector<S>& x0v, const std::vector<S>& xT) const {
    S J = prob_.model().phi(std::span<const S>(x0v), std::span<const S>(xT));
    if (!penal_rows_.empty()) {
      const std::vector<S> e = eta_values<S>(prob_, x0v, xT);
      for (int j : penal_rows_) J += w_ * e[j] * e[j];
    }
    return J;
  }

  // An eta row is eliminated when it reads x0_i - c (or c - x0_i) at two
  // distinct points.
  void find_eliminations() {
    const int n = prob_.n(), d = prob_.d_eta();
    fixed_x0_ = prob_.sample_x();
    std::vector<bool> fixed(n, false);
    const Vector& s0 = prob_.sample_x();
    Vector s1 = s0;
    for (int i = 0; i < n; ++i) s1[i] += 0.37 * (1.0 + std::abs(s0[i]));
    auto grads = [&](const Vector& x) {
      Vector z(2 * n);
      std::copy(x.begin(), x.end(), z.begin());
      std::copy(x.begin(), x.end(), z.begin() + n);
      return sshoot::jacobian(
          [&](const std::vector<D1>& w) {
            return eta_values<D1>(prob_, std::vector<D1>(w.begin(), w.begin() + n),
                                  std::vector<D1>(w.begin() + n, w.end()));
          },
          z);
    };
    const Matrix G0 = d > 0 ? grads(s0) : Matrix(0, 2 * n);
    const Matrix G1 = d > 0 ? grads(s1) : Matrix(0, 2 * n);
    const Vector e0 = eta_values<double>(prob_, s0, s0);
    for (int j = 0; j < d; ++j) {
      int idx = -1;
      bool simple = true;
      for (int c = 0; c < 2 * n && simple; ++c) {
        const double a = G0(j, c);
        if (a != G1(j, c)) simple = false;
        if (a == 0.0) continue;
        if (c >= n || std::abs(a) != 1.0 || idx >= 0) simple = false;
        idx = c;
      }
      if (simple && idx >= 0 && !fixed[idx]) {
        const double sgn = G0(j, idx);
        fixed[idx] = true;
        fixed_x0_[idx] = s0[idx] - sgn * e0[j];
        elim_rows_.push_back(j);
        elim_idx_.push_back(idx);
        elim_sign_.push_back(sgn);
      } else {
        penal_rows_.push_back(j);
      }
    }
    for (int i = 0; i < n; ++i)
      if (!fixed[i]) free_.push_back(i);
  }

  const ProblemDef& prob_;
  int N_, sub_;
  double h_;
  std::size_t nc_ = 0;
  double w_ = 1.0;
  Vector lo_, hi_;
  Vector fixed_x0_;
  std::vector<int> free_;
  std::vector<int> elim_rows_, elim_idx_, penal_rows_;
  std::vector<double> elim_sign_;
  mutable Vector dJdx0_;
};

double safe_value(const Transcription& tr, const Vector& z) {
  try {
    const double J = tr.value(z);
    return std::isfinite(J) ? J : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Spectral projected gradient with a nonmonotone Armijo search.
void spg(const Transcription& tr, Vector& z, int iters) {
  constexpr int memory = 10;
  constexpr double gamma = 1e-4, a_min = 1e-12, a_max = 1e12;
  Vector g;
  double J = tr.gradient(z, g);
  if (!std::isfinite(J)) throw Diverged("non-finite cost at the initial controls");
  std::deque<double> recent{J};
  auto proj_step = [&](double a) {
    Vector w(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) w[i] = z[i] - a * g[i];
    w = tr.project(w);
    for (std::size_t i = 0; i < z.size(); ++i) w[i] -= z[i];
    return w;
  };
  double alpha = 1.0 / std::max(norm_inf(proj_step(1.0)), 1e-12);
  for (int it = 0; it < iters; ++it) {
    const Vector d = proj_step(alpha);
    if (norm_inf(d) <= 1e-14 * (1.0 + norm_inf(z))) break;
    const double gd = dot(g, d);
    const double Jmax = *std::max_element(recent.begin(), recent.end());
    double lam = 1.0;
    Vector trial;
    bool ok = false;
    for (int h = 0; h < 60; ++h, lam *= 0.5) {
      trial = axpy(lam, d, z);
      if (safe_value(tr, trial) <= Jmax + gamma * lam * gd) {
        ok = true;
        break;
      }
    }
    if (!ok) break;
    Vector g_new;
    const double J_new = tr.gradient(trial, g_new);
    Vector s(z.size()), y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      s[i] = trial[i] - z[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    alpha = sy > 0.0 ? std::clamp(dot(s, s) / sy, a_min, a_max) : a_max;
    z = std::move(trial);
    g = std::move(g_new);
    J = J_new;
    recent.push_back(J);
    if (recent.size() > memory) recent.pop_front();
  }
}

}  // namespace

OracleResult direct_solve(const ProblemDef& prob, const OracleOptions& opts) {
  if (opts.grid_N < 1) throw InvalidParams("grid_N must be positive");
  if (opts.iters < 0 || opts.outer_loops < 1 || opts.substeps < 1)
    throw InvalidParams("oracle iteration counts must be positive");
  if (static_cast<int>(prob.u_bounds.size()) != prob.l())
    throw InvalidParams("oracle needs bounds on every nonlinear control");
  for (const Bounds& b : prob.u_bounds)
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw InvalidParams("oracle needs finite bounds on u");
  for (const Bounds& b : prob.v_bounds())
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw InvalidParams("oracle needs finite bounds on v");

  Transcription tr(prob, opts);
  Vector z = tr.initial(opts.seed);
  OracleResult res;
  res.eliminated_rows = tr.eliminated();
  double w = opts.initial_weight;
  for (int loop = 0; loop < opts.outer_loops; ++loop, w *= 10.0) {
    tr.set_weight(w);
    if (z.size() > 0) spg(tr, z, opts.iters);
    std::vector<Vector> xs;
    tr.value(z, &xs);
    res.loop_costs.push_back(tr.phi(xs.front(), xs.back()));
  }

  Vector g;
  std::vector<Vector> xs, lambdas;
  tr.gradient(z, g, &xs, &lambdas);
  const double cost = tr.phi(xs.front(), xs.back());
  if (!std::isfinite(cost)) throw Diverged("oracle cost is not finite");

  Extremal& ext = res.trajectory;
  Vector u, v;
  for (int k = 0; k <= opts.grid_N; ++k) {
    tr.controls(z, std::min(k, opts.grid_N - 1), u, v);
    ext.grid.push_back(k == opts.grid_N ? prob.T() : k * tr.h());
    ext.x.push_back(xs[k]);
    ext.p.push_back(lambdas[k]);
    ext.u.push_back(u);
    ext.v.push_back(v);
    ext.phase.push_back(0);
  }
  ext.arcs = {ArcSpec::all_singular(prob.m())};
  ext.beta = tr.multipliers(xs.front(), xs.back());
  res.cost = cost;
  res.eta_violation = tr.violation(xs.front(), xs.back());
  return res;
}

ControlStructure detect_structure(const std::vector<double>& grid,
                                  const std::vector<Vector>& v_trajectory,
                                  const std::vector<Bounds>& bounds, double band, int min_run) {
  if (bounds.empty()) throw NoStructure("no affine controls");
  if (v_trajectory.empty() || grid.size() != v_trajectory.size())
    throw NoStructure("empty or misaligned control trajectory");
  if (!(band > 0.0 && band < 0.5)) throw InvalidParams("band must lie in (0, 0.5)");
  const std::size_t m = bounds.size();
  for (const Bounds& b : bounds)
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw InvalidParams("structure detection needs finite bounds");

  std::vector<std::vector<ArcType>> labels;
  for (const Vector& v : v_trajectory) {
    if (v.size() != m) throw DimensionMismatch("control trajectory width");
    std::vector<ArcType> lab(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = bounds[i].hi - bounds[i].lo;
      if (v[i] <= bounds[i].lo + band * r)
        lab[i] = ArcType::Lower;
      else if (v[i] >= bounds[i].hi - band * r)
        lab[i] = ArcType::Upper;
      else
        lab[i] = ArcType::Singular;
    }
    labels.push_back(std::move(lab));
  }

  struct Run {
    std::vector<ArcType> type;
    std::size_t first, count;
  };
  std::vector<Run> runs;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!runs.empty() && runs.back().type == labels[k])
      ++runs.back().count;
    else
      runs.push_back({labels[k], k, 1});
  }
  // Absorb short runs into their left neighbour (right one for the first run).
  bool changed = true;
  while (changed && runs.size() > 1) {
    changed = false;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (static_cast<int>(runs[r].count) >= min_run) continue;
      if (r == 0) {
        runs[1].first = runs[0].first;
        runs[1].count += runs[0].count;
      } else {
        runs[r - 1].count += runs[r].count;
      }
      runs.erase(runs.begin() + r);
      for (std::size_t q = 1; q < runs.size();) {
        if (runs[q].type == runs[q - 1].type) {
          runs[q - 1].count += runs[q].count;
          runs.erase(runs.begin() + q);
        } else {
          ++q;
        }
      }
      changed = true;
      break;
    }
  }

  ControlStructure cs;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    cs.phases.push_back(runs[r].type);
    if (r > 0) cs.switch_guesses.push_back(grid[runs[r].first]);
  }
  return cs;
}

TPShootingPoint tp_guess_from_oracle(const ProblemDef& prob, const ControlStructure& cs,
                                     const OracleResult& oracle,
                                     std::vector<ControlGuess>* guesses) {
  const Extremal& o = oracle.trajectory;
  if (o.size() < 2) throw InsufficientData("oracle trajectory too short");
  auto interp = [&](const std::vector<Vector>& a, double t) {
    std::size_t i = 0;
    while (i + 2 < o.size() && o.grid[i + 1] <= t) ++i;
    const double s = std::clamp((t - o.grid[i]) / (o.grid[i + 1] - o.grid[i]), 0.0, 1.0);
    Vector r(a[i].size());
    for (std::size_t q = 0; q < r.size(); ++q) r[q] = (1.0 - s) * a[i][q] + s * a[i + 1][q];
    return r;
  };
  auto node_at = [&](double t) {
    std::size_t i = 0;
    while (i + 1 < o.size() && o.grid[i + 1] <= t) ++i;
    return i;
  };
  TPShootingPoint nu;
  nu.switches = cs.switch_guesses;
  nu.beta = o.beta;
  if (static_cast<int>(nu.beta.size()) != prob.d_eta())
    throw DimensionMismatch("oracle multipliers do not match the problem");
  if (guesses) guesses->clear();
  for (int k = 0; k < cs.N(); ++k) {
    const double t = k == 0 ? 0.0 : cs.switch_guesses[k - 1];
    nu.x0.push_back(interp(o.x, t));
    nu.p0.push_back(interp(o.p, t));
    if (guesses) {
      // Control guesses from a few nodes into the phase, away from the switch.
      const double t_end = k + 1 < cs.N() ? cs.switch_guesses[k] : prob.T();
      const std::size_t i = node_at(t + 0.1 * (t_end - t));
      ControlGuess cg;
      cg.u = o.u[i];
      const ArcSpec arc = cs.arc(prob, k);
      for (int s : arc.singular) cg.v_sing.push_back(o.v[i][s]);
      guesses->push_back(std::move(cg));
    }
  }
  return nu;
}

double objective(const ProblemDef& prob, const Extremal& ext) {
  if (ext.size() == 0) throw InsufficientData("empty extremal");
  return prob.model().phi(std::span<const double>(ext.x.front()),
                          std::span<const double>(ext.x.back()));
}

}  // namespace sshoot
