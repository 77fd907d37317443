#include "singular_shoot/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "singular_shoot/autodiff.hpp"

namespace sshoot {

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::string num(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", a);
  return buf;
}

}  // namespace

SolveOutcome solve_pipeline(const ProblemDef& prob, const SolverConfig& cfg, const LogFn& log) {
  SolveOutcome out;
  try {
    say(log, "oracle: grid_N = " + std::to_string(cfg.oracle.grid_N));
    out.oracle = direct_solve(prob, cfg.oracle);
    say(log, "oracle: cost " + num(out.oracle.cost) + ", eta violation " +
                 num(out.oracle.eta_violation));
  } catch (const Error& e) {
    throw StageFailure("oracle", e.what());
  }

  try {
    if (cfg.structure) {
      out.structure = *cfg.structure;
    } else {
      const Extremal& o = out.oracle.trajectory;
      out.structure = detect_structure(o.grid, o.v, prob.v_bounds(), cfg.band, cfg.min_run);
    }
    out.structure.validate(prob);
    say(log, "structure: " + std::to_string(out.structure.N()) + " phases");
  } catch (const Error& e) {
    throw StageFailure("structure", e.what());
  }

  try {
    ShootingOptions so = cfg.shooting;
    const ControlStructure& cs = out.structure;
    const TPShootingPoint nu0 = tp_guess_from_oracle(prob, cs, out.oracle, &so.guesses);
    const int N = cs.N();
    auto R = [&](const Vector& z) {
      return tp_residual(prob, cs, TPShootingPoint::unpack(prob, N, z), so);
    };
    auto J = [&](const Vector& z) {
      return tp_jacobian(prob, cs, TPShootingPoint::unpack(prob, N, z), so);
    };
    GNResult gn = gn_solve(R, J, nu0.pack(), cfg.gn);
    out.report = gn.report;
    for (std::size_t k = 0; k < gn.report.residual_norms.size(); ++k)
      say(log, "gauss-newton: iter " + std::to_string(k) + " |S| = " +
                   num(gn.report.residual_norms[k]));
    if (gn.report.status != GNStatus::Converged)
      throw NoConvergence(to_string(gn.report.status) + " " + gn.report.message);
    out.nu = TPShootingPoint::unpack(prob, N, gn.nu);
    out.residual_inf = norm_inf(R(gn.nu));
    out.extremal = assemble_extremal(prob, cs, out.nu, so);
    out.objective = objective(prob, out.extremal);
  } catch (const Error& e) {
    throw StageFailure("shooting", e.what());
  }
  return out;
}

ControlStructure structure_of(const ProblemDef& prob, const Extremal& ext) {
  ControlStructure cs;
  for (std::size_t k = 0; k < ext.arcs.size(); ++k) {
    std::vector<ArcType> types(prob.m(), ArcType::Singular);
    for (int i = 0; i < prob.m(); ++i) {
      if (ext.arcs[k].is_singular(i)) continue;
      types[i] = ext.arcs[k].fixed_v[i] == prob.v_bounds()[i].lo ? ArcType::Lower : ArcType::Upper;
    }
    cs.phases.push_back(std::move(types));
  }
  for (std::size_t q = 1; q < ext.size(); ++q)
    if (ext.phase[q] != ext.phase[q - 1]) cs.switch_guesses.push_back(ext.grid[q]);
  return cs;
}

Vector fit_multipliers(const ProblemDef& prob, const Extremal& ext, double* residual) {
  const int n = prob.n(), d = prob.d_eta();
  Vector z(ext.x.front());
  z.insert(z.end(), ext.x.back().begin(), ext.x.back().end());
  auto split = [n](const std::vector<D1>& w, std::vector<D1>& a, std::vector<D1>& b) {
    a.assign(w.begin(), w.begin() + n);
    b.assign(w.begin() + n, w.end());
  };
  const Matrix De = jacobian(
      [&](const std::vector<D1>& w) {
        std::vector<D1> a, b;
        split(w, a, b);
        return eta_values<D1>(prob, a, b);
      },
      z);
  const Vector Dphi = gradient(
      [&](const std::vector<D1>& w) {
        std::vector<D1> a, b;
        split(w, a, b);
        return prob.model().phi(std::span<const D1>(a), std::span<const D1>(b));
      },
      z);
  Matrix A(2 * n, d);
  Vector rhs(2 * n);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < d; ++j) {
      A(s, j) = De(j, s);
      A(n + s, j) = -De(j, n + s);
    }
    rhs[s] = -ext.p.front()[s] - Dphi[s];
    rhs[n + s] = -ext.p.back()[s] + Dphi[n + s];
  }
  Vector beta = d > 0 ? solve_least_squares(A, rhs) : Vector{};
  if (residual) {
    const Vector r = d > 0 ? Vector(A * beta) : Vector(2 * n, 0.0);
    double worst = 0.0;
    for (int s = 0; s < 2 * n; ++s) worst = std::max(worst, std::abs(r[s] - rhs[s]));
    *residual = worst;
  }
  return beta;
}

bool CheckReport::all_green() const {
  for (const CheckItem& c : items)
    if (!c.ok) return false;
  return true;
}

std::string CheckReport::text() const {
  std::string s;
  for (const CheckItem& c : items) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %-5s %12.4e  (threshold %.1e)", c.name.c_str(),
                  c.ok ? "ok" : "FAIL", c.value, c.threshold);
    s += buf;
    if (!c.note.empty()) s += "  " + c.note;
    s += "\n";
  }
  return s;
}

CheckReport check_extremal(const ProblemDef& prob, const Extremal& ext_in) {
  CheckReport rep;
  Extremal ext = ext_in;
  auto run = [&](const std::string& name, double thr, bool upper, auto&& fn) {
    CheckItem it{name, 0.0, thr, false, ""};
    try {
      it.value = fn();
      it.ok = std::isfinite(it.value) && (upper ? it.value <= thr : it.value > thr);
    } catch (const Error& e) {
      it.value = std::numeric_limits<double>::quiet_NaN();
      it.note = e.what();
    }
    rep.items.push_back(std::move(it));
  };

  ext.beta.assign(prob.d_eta(), 0.0);
  run("transversality", 1e-6, true, [&] {
    double r = 0.0;
    ext.beta = fit_multipliers(prob, ext, &r);
    return r;
  });

  run("shooting_residual", 1e-6, true, [&] {
    const ControlStructure cs = structure_of(prob, ext);
    TPShootingPoint nu;
    nu.switches = cs.switch_guesses;
    nu.beta = ext.beta;
    ShootingOptions so;
    int steps = -1;
    for (int k = 0; k < cs.N(); ++k) {
      std::size_t first = 0, count = 0;
      for (std::size_t q = 0; q < ext.size(); ++q)
        if (ext.phase[q] == k) {
          if (count == 0) first = q;
          ++count;
        }
      if (steps >= 0 && steps != static_cast<int>(count) - 1)
        throw GridMismatch("phases have different step counts");
      steps = static_cast<int>(count) - 1;
      nu.x0.push_back(ext.x[first]);
      nu.p0.push_back(ext.p[first]);
      ControlGuess g;
      g.u = ext.u[first];
      for (int s : ext.arcs[k].singular) g.v_sing.push_back(ext.v[first][s]);
      so.guesses.push_back(std::move(g));
    }
    so.steps = steps;
    return norm_inf(tp_residual(prob, cs, nu, so));
  });

  const double H0 = hamiltonian(prob, ext.x[0], ext.u[0], ext.v[0], ext.p[0]);
  run("hamiltonian_drift", 1e-6 * (1.0 + std::abs(H0)), true,
      [&] { return hamiltonian_drift(prob, ext); });

  double gamma_min = std::numeric_limits<double>::infinity();
  run("slc_margin_huu", 0.0, false, [&] {
    double huu = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < ext.size(); ++q) {
      const SLCMargins mgn =
          slc_margins(prob, ext.x[q], ext.u[q], ext.v[q], ext.p[q], ext.arcs.at(ext.phase[q]));
      huu = std::min(huu, mgn.huu);
      gamma_min = std::min(gamma_min, mgn.gamma);
    }
    return huu;
  });
  run("slc_margin_gamma", 0.0, false, [&] { return gamma_min; });
  run("goh_residual", 1e-8, true, [&] { return goh_residual(prob, ext); });
  run("coercivity_certificate", 0.0, false,
      [&] { return coercivity_certificate(prob, ext, true).rho; });
  GohIdentityErrors ge;
  bool have_ge = false;
  auto identities = [&] {
    if (!have_ge) {
      ge = verify_goh_identities(prob, ext);
      have_ge = true;
    }
  };
  run("identity_err_E", 1e-8, true, [&] {
    identities();
    return ge.err_E;
  });
  run("identity_err_R", 1e-6, true, [&] {
    identities();
    return ge.err_R;
  });
  return rep;
}

}  // namespace sshoot
