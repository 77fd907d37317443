#include "singular_shoot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "singular_shoot/errors.hpp"
#include "singular_shoot/models.hpp"

namespace sshoot {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read_num(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  }
  out = v.get<T>();
}

std::string arc_name(ArcType a) {
  switch (a) {
    case ArcType::Lower: return "lower";
    case ArcType::Upper: return "upper";
    case ArcType::Singular: return "singular";
  }
  return "singular";
}

ArcType arc_from(const std::string& s) {
  if (s == "lower") return ArcType::Lower;
  if (s == "upper") return ArcType::Upper;
  if (s == "singular") return ArcType::Singular;
  throw ConfigError("unknown arc type '" + s + "'");
}

ControlStructure structure_from(const json& j) {
  check_keys(j, {"phases", "switches"}, "structure");
  if (!j.contains("phases") || !j.at("phases").is_array())
    throw ConfigError("structure.phases must be an array");
  ControlStructure cs;
  for (const json& ph : j.at("phases")) {
    if (!ph.is_array()) throw ConfigError("each phase lists one arc type per affine control");
    std::vector<ArcType> types;
    for (const json& a : ph) {
      if (!a.is_string()) throw ConfigError("arc types are strings");
      types.push_back(arc_from(a.get<std::string>()));
    }
    cs.phases.push_back(std::move(types));
  }
  if (j.contains("switches")) {
    if (!j.at("switches").is_array()) throw ConfigError("structure.switches must be an array");
    for (const json& t : j.at("switches")) {
      if (!t.is_number()) throw ConfigError("switch times are numbers");
      cs.switch_guesses.push_back(t.get<double>());
    }
  }
  return cs;
}

std::string fmt(double a) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", a);
  return buf;
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

SolverConfig parse_config(const std::string& json_text, const std::string& label) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(label + ": " + e.what());
  }
  try {
    check_keys(j, {"model", "params", "oracle", "shooting", "gn", "structure", "seed"}, label);
    SolverConfig cfg;
    if (!j.contains("model") || !j.at("model").is_string())
      throw ConfigError(label + ": 'model' must be a string");
    cfg.model = j.at("model").get<std::string>();
    if (j.contains("params")) {
      const json& p = j.at("params");
      if (!p.is_object()) throw ConfigError(label + ": params must be an object");
      for (auto it = p.begin(); it != p.end(); ++it) {
        if (!it.value().is_number()) throw ConfigError("params." + it.key() + " must be a number");
        cfg.params[it.key()] = it.value().get<double>();
      }
    }
    if (j.contains("oracle")) {
      const json& o = j.at("oracle");
      check_keys(o, {"grid_N", "iters", "outer_loops", "substeps", "band", "min_run"}, "oracle");
      read_num(o, "grid_N", cfg.oracle.grid_N, "oracle");
      read_num(o, "iters", cfg.oracle.iters, "oracle");
      read_num(o, "outer_loops", cfg.oracle.outer_loops, "oracle");
      read_num(o, "substeps", cfg.oracle.substeps, "oracle");
      read_num(o, "band", cfg.band, "oracle");
      read_num(o, "min_run", cfg.min_run, "oracle");
      if (cfg.oracle.grid_N < 1) throw ConfigError("oracle.grid_N must be positive");
      if (cfg.oracle.iters < 0 || cfg.oracle.outer_loops < 1 || cfg.oracle.substeps < 1)
        throw ConfigError("oracle iteration counts must be positive");
      if (!(cfg.band > 0.0 && cfg.band < 0.5)) throw ConfigError("oracle.band must lie in (0, 0.5)");
      if (cfg.min_run < 1) throw ConfigError("oracle.min_run must be positive");
    }
    if (j.contains("shooting")) {
      const json& s = j.at("shooting");
      check_keys(s, {"steps", "min_phase_fraction"}, "shooting");
      read_num(s, "steps", cfg.shooting.steps, "shooting");
      read_num(s, "min_phase_fraction", cfg.shooting.min_phase_fraction, "shooting");
      if (cfg.shooting.steps < 4) throw ConfigError("shooting.steps must be at least 4");
    }
    if (j.contains("gn")) {
      const json& g = j.at("gn");
      check_keys(g, {"max_iter", "tol_residual", "tol_step", "damping"}, "gn");
      read_num(g, "max_iter", cfg.gn.max_iter, "gn");
      read_num(g, "tol_residual", cfg.gn.tol_residual, "gn");
      read_num(g, "tol_step", cfg.gn.tol_step, "gn");
      if (g.contains("damping")) {
        const std::string d = g.at("damping").is_string() ? g.at("damping").get<std::string>() : "";
        if (d == "armijo")
          cfg.gn.damping = Damping::Armijo;
        else if (d == "none")
          cfg.gn.damping = Damping::None;
        else
          throw ConfigError("gn.damping must be \"armijo\" or \"none\"");
      }
      if (!(cfg.gn.tol_residual > 0.0) || !(cfg.gn.tol_step > 0.0) || cfg.gn.max_iter < 0)
        throw ConfigError("gn tolerances must be positive");
    }
    if (j.contains("structure")) cfg.structure = structure_from(j.at("structure"));
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      cfg.oracle.seed = j.at("seed").get<std::uint64_t>();
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(label + ": " + e.what());
  }
}

SolverConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  return parse_config(read_text(path), path);
}

ProblemDef build_problem(const SolverConfig& cfg) {
  try {
    return build_registered(cfg.model, cfg.params);
  } catch (const InvalidParams& e) {
    throw ConfigError(e.what());
  }
}

std::string trajectory_csv(const ProblemDef& prob, const Extremal& ext) {
  std::ostringstream out;
  out << "t";
  for (int s = 1; s <= prob.n(); ++s) out << ",x" << s;
  for (int s = 1; s <= prob.n(); ++s) out << ",p" << s;
  for (int a = 1; a <= prob.l(); ++a) out << ",u" << a;
  for (int i = 1; i <= prob.m(); ++i) out << ",v" << i;
  out << ",phase\n";
  for (std::size_t k = 0; k < ext.size(); ++k) {
    out << fmt(ext.grid[k]);
    for (double a : ext.x[k]) out << ',' << fmt(a);
    for (double a : ext.p[k]) out << ',' << fmt(a);
    for (double a : ext.u[k]) out << ',' << fmt(a);
    for (double a : ext.v[k]) out << ',' << fmt(a);
    out << ',' << (ext.phase.empty() ? 0 : ext.phase[k]) << '\n';
  }
  return out.str();
}

void write_trajectory_csv(const std::string& path, const ProblemDef& prob, const Extremal& ext) {
  write_text(path, trajectory_csv(prob, ext));
}

Extremal parse_trajectory_csv(const std::string& text, const ProblemDef& prob) {
  std::istringstream in(text);
  std::string line;
  auto chomp = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw ConfigError("empty trajectory file");
  chomp(line);
  const std::size_t n = prob.n(), l = prob.l(), m = prob.m();
  const std::size_t cols = 1 + 2 * n + l + m + 1;
  {
    std::size_t c = 1;
    for (char ch : line) c += ch == ',';
    if (c != cols || line.rfind("t,", 0) != 0)
      throw ConfigError("trajectory header does not match the model");
  }
  Extremal ext;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    chomp(line);
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() != cols) throw ConfigError("row " + std::to_string(row) + ": wrong column count");
    auto it = vals.begin();
    ext.grid.push_back(*it++);
    ext.x.emplace_back(it, it + n);
    it += n;
    ext.p.emplace_back(it, it + n);
    it += n;
    ext.u.emplace_back(it, it + l);
    it += l;
    ext.v.emplace_back(it, it + m);
    it += m;
    const double ph = *it;
    if (ph < 0 || ph != std::floor(ph)) throw ConfigError("row " + std::to_string(row) + ": bad phase");
    ext.phase.push_back(static_cast<int>(ph));
  }
  if (ext.size() < 2) throw ConfigError("trajectory needs at least two rows");
  for (std::size_t k = 1; k < ext.size(); ++k) {
    if (ext.grid[k] < ext.grid[k - 1]) throw ConfigError("trajectory times decrease");
    if (ext.phase[k] != ext.phase[k - 1] && ext.phase[k] != ext.phase[k - 1] + 1)
      throw ConfigError("phase indices must increase by one");
  }
  if (ext.phase.front() != 0) throw ConfigError("first phase must be 0");

  const int N = ext.phase.back() + 1;
  for (int k = 0; k < N; ++k) {
    ArcSpec arc;
    arc.fixed_v.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const Bounds& b = prob.v_bounds()[i];
      bool at_lo = std::isfinite(b.lo), at_hi = std::isfinite(b.hi);
      for (std::size_t q = 0; q < ext.size(); ++q) {
        if (ext.phase[q] != k) continue;
        at_lo = at_lo && std::abs(ext.v[q][i] - b.lo) <= 1e-12 * (1.0 + std::abs(b.lo));
        at_hi = at_hi && std::abs(ext.v[q][i] - b.hi) <= 1e-12 * (1.0 + std::abs(b.hi));
      }
      if (at_lo)
        arc.fixed_v[i] = b.lo;
      else if (at_hi)
        arc.fixed_v[i] = b.hi;
      else
        arc.singular.push_back(static_cast<int>(i));
    }
    ext.arcs.push_back(std::move(arc));
  }
  return ext;
}

Extremal read_trajectory_csv(const std::string& path, const ProblemDef& prob) {
  return parse_trajectory_csv(read_text(path), prob);
}

std::string structure_json(const ControlStructure& cs) {
  json j;
  j["phases"] = json::array();
  for (const auto& ph : cs.phases) {
    json a = json::array();
    for (ArcType t : ph) a.push_back(arc_name(t));
    j["phases"].push_back(a);
  }
  j["switches"] = cs.switch_guesses;
  return j.dump(2) + "\n";
}

ControlStructure parse_structure_json(const std::string& text) {
  try {
    return structure_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("structure: ") + e.what());
  }
}

ControlStructure load_structure(const std::string& path) {
  return parse_structure_json(read_text(path));
}

std::string convergence_json(const GNReport& rep) {
  json arr = json::array();
  for (std::size_t k = 0; k < rep.residual_norms.size(); ++k)
    arr.push_back({{"iter", k},
                   {"residual_norm", rep.residual_norms[k]},
                   {"step_norm", rep.step_norms[k]}});
  return arr.dump(2) + "\n";
}

}  // namespace sshoot
