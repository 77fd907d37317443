#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

fs::path work(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sshoot_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

CliRun cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string(SSHOOT_CLI) + " " + args + " > " + o.string() + " 2> " +
                          e.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

std::string config(const std::string& name) {
  return (fs::path(SSHOOT_SOURCE_DIR) / "configs" / name).string();
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << json;
  return p;
}

// The LQ solve is shared by several tests.
const fs::path& lq_run_dir() {
  static const fs::path dir = [] {
    const fs::path d = work("lq_solve");
    cli("solve " + config("lq.json") + " --out " + d.string(), d);
    return d;
  }();
  return dir;
}

double field_after(const std::string& text, const std::string& key) {
  const auto at = text.find(key + "=");
  if (at == std::string::npos) return NAN;
  return std::stod(text.substr(at + key.size() + 1));
}

}  // namespace

TEST(CliSolve, LqConverges) {
  const fs::path d = lq_run_dir();
  const std::string out = slurp(d / "stdout.txt");
  EXPECT_NE(out.find("status=converged"), std::string::npos) << out << slurp(d / "stderr.txt");
  EXPECT_LE(field_after(out, "residual"), 1e-8);
  for (const char* f : {"trajectory.csv", "convergence.json", "structure.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  EXPECT_FALSE(fs::exists(d / "coercivity.txt"));
  const auto s = nlohmann::json::parse(slurp(d / "structure.json"));
  EXPECT_EQ(s["phases"].size(), 3u);
  EXPECT_EQ(s["switches"].size(), 2u);
}

TEST(CliSolve, DeterministicOutput) {
  const fs::path d = work("lq_again");
  const CliRun r = cli("solve " + config("lq.json") + " --out " + d.string(), d);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(d / "trajectory.csv"), slurp(lq_run_dir() / "trajectory.csv"));
  EXPECT_EQ(slurp(d / "convergence.json"), slurp(lq_run_dir() / "convergence.json"));
}

TEST(CliSolve, MissingConfigExitsTwo) {
  const fs::path d = work("missing");
  const std::string path = (d / "absent.json").string();
  const CliRun r = cli("solve " + path + " --out " + d.string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(path), std::string::npos) << r.err;
}

TEST(CliSolve, SolverFailureExitsThree) {
  const fs::path d = work("fail");
  const fs::path cfg = write_config(d, R"({"model": "degenerate_lq", "gn": {"max_iter": 1}})");
  const CliRun r = cli("solve " + cfg.string() + " --out " + d.string(), d);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("shooting failed"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("after"), std::string::npos) << r.err;
}

TEST(CliSolve, SirsWithSecondOrderReport) {
  const fs::path d = work("sirs");
  const CliRun r = cli("solve " + config("sirs.json") + " --check-sosc --out " + d.string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(field_after(r.out, "residual"), 1e-8);
  ASSERT_TRUE(fs::exists(d / "coercivity.txt"));
  EXPECT_NE(slurp(d / "coercivity.txt").find("coercivity"), std::string::npos);
}

TEST(CliOracle, LqWritesStructure) {
  const fs::path d = work("oracle_lq");
  const CliRun r = cli("oracle " + config("lq.json") + " --out " + d.string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status=oracle"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "oracle_trajectory.csv"));
  const auto s = nlohmann::json::parse(slurp(d / "structure.json"));
  EXPECT_EQ(s["phases"].size(), 3u);
}

TEST(CliOracle, ControlFreeWritesTrajectoryOnly) {
  const fs::path d = work("oracle_free");
  const fs::path cfg = write_config(d, R"({"model": "free_decay", "oracle": {"grid_N": 20}})");
  const CliRun r = cli("oracle " + cfg.string() + " --out " + d.string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "oracle_trajectory.csv"));
  EXPECT_FALSE(fs::exists(d / "structure.json"));
}

TEST(CliOracle, BadGridExitsTwo) {
  const fs::path d = work("oracle_bad");
  const fs::path cfg = write_config(d, R"({"model": "degenerate_lq", "oracle": {"grid_N": 0}})");
  EXPECT_EQ(cli("oracle " + cfg.string() + " --out " + d.string(), d).code, 2);
}

TEST(CliCheck, ConvergedLqIsGreen) {
  const fs::path d = work("check_green");
  const CliRun r = cli("check " + (lq_run_dir() / "trajectory.csv").string() + " " + config("lq.json"), d);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("status=green"), std::string::npos);
  for (const char* item : {"shooting_residual", "hamiltonian_drift", "slc_margin_huu",
                           "goh_residual", "coercivity_certificate", "identity_err_R"})
    EXPECT_NE(r.out.find(item), std::string::npos) << item;
}

TEST(CliCheck, ZeroedCostatesFlagged) {
  const fs::path d = work("check_zero");
  std::istringstream in(slurp(lq_run_dir() / "trajectory.csv"));
  std::ofstream out(d / "zeroed.csv");
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  // Columns t,x1,x2,x3,p1,p2,p3,...
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    for (int k = 4; k <= 6; ++k) cells[k] = "0";
    for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
    out << '\n';
  }
  out.close();
  const CliRun r = cli("check " + (d / "zeroed.csv").string() + " " + config("lq.json"), d);
  EXPECT_EQ(r.code, 1) << r.out << r.err;
  EXPECT_NE(r.out.find("status=flagged"), std::string::npos);
  const auto at = r.out.find("transversality");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NE(r.out.substr(at, r.out.find('\n', at) - at).find("FAIL"), std::string::npos) << r.out;
}

TEST(CliCheck, MalformedCsvExitsTwo) {
  const fs::path d = work("check_bad");
  std::ofstream(d / "bad.csv") << "t,x1\n0,1\n";
  EXPECT_EQ(cli("check " + (d / "bad.csv").string() + " " + config("lq.json"), d).code, 2);
}

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path d = work("usage");
  EXPECT_EQ(cli("", d).code, 2);
  EXPECT_EQ(cli("solve", d).code, 2);
  EXPECT_EQ(cli("--help", d).code, 0);
}
