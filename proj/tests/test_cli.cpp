#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using namespace sliceproj;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args, const cli::CliHooks& hooks = {}) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err, hooks);
  return {code, out.str(), err.str()};
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sliceproj_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

 private:
  fs::path dir_;
};

double field(const std::string& line, const std::string& key) {
  const auto at = line.find(key + "=");
  EXPECT_NE(at, std::string::npos) << key << " missing in: " << line;
  return std::stod(line.substr(at + key.size() + 1));
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(CliProbe, ExactNTwoRecoversFourThirds) {
  const CliRun r = run({"probe", "--n", "2", "--mode", "exact"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("n=2 slope=", 0), 0u);
  EXPECT_NEAR(field(r.out, "slope"), 4.0 / 3.0, 0.05);
  EXPECT_NEAR(field(r.out, "target"), 1.0 / 3.0, 1e-15);
  EXPECT_NE(r.out.find("|Δ|="), std::string::npos);
}

TEST(CliProbe, ExactNSixMatchesLibraryFit) {
  const CliRun r = run({"probe", "--n", "6", "--mode", "exact"});
  EXPECT_EQ(r.code, 0);
  const ProbeReport oracle = probe_semismoothness(make_cone(6), ProbeMode::exact, {});
  EXPECT_EQ(field(r.out, "slope"), oracle.fitted_slope);
  EXPECT_NEAR(field(r.out, "slope"), 64.0 / 63.0, 0.02);
  EXPECT_NEAR(field(r.out, "implied_order"), field(r.out, "slope") - 1.0, 1e-15);
}

TEST(CliProbe, InvalidConfigurationsExitTwo) {
  const CliRun low = run({"probe", "--n", "1", "--mode", "exact"});
  EXPECT_EQ(low.code, 2);
  EXPECT_NE(low.err.find("n must be >= 2"), std::string::npos) << low.err;
  EXPECT_EQ(run({"probe", "--n", "13"}).code, 2);
  EXPECT_EQ(run({"probe", "--mode", "fuzzy"}).code, 2);
  EXPECT_EQ(run({"probe", "--points", "3"}).code, 2);
  EXPECT_EQ(run({"probe", "--t-min", "0.5", "--t-max", "0.1"}).code, 2);
  EXPECT_EQ(run({"probe", "--tol", "-1"}).code, 2);
  EXPECT_EQ(run({"probe", "--gamma-frac", "1.5"}).code, 2);
  EXPECT_EQ(run({"probe", "--fd-step", "0"}).code, 2);
  EXPECT_EQ(run({"probe", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"probe", "--n", "two"}).code, 2);
  EXPECT_EQ(run({"probe", "--bogus"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  const CliRun flag = run({"probe", "--points", "2"});
  EXPECT_NE(flag.err.find("points"), std::string::npos);
}

TEST(CliProbe, SlopeMissExitsOne) {
  // Far from t = 0 the higher-order terms dominate.
  const CliRun r = run({"probe", "--n", "2", "--t-min", "0.3", "--t-max", "0.99"});
  EXPECT_EQ(r.code, 1);
}

TEST(CliProbe, SolverFailureExitsThree) {
  const CliRun r = run({"probe", "--n", "2", "--mode", "numeric", "--tol", "1e-300", "--max-iter",
                     "200"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("solver failure"), std::string::npos);
}

TEST(CliProbe, NumericModeWithinTolerance) {
  const CliRun r = run({"probe", "--n", "3", "--mode", "numeric", "--jobs", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(field(r.out, "slope"), 8.0 / 7.0, 0.1);
}

TEST(CliProbe, DeterministicAcrossRuns) {
  const CliRun a = run({"probe", "--n", "5", "--format", "json", "--jobs", "1"});
  const CliRun b = run({"probe", "--n", "5", "--format", "json", "--jobs", "3"});
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Workdir, ProbeReportFilesRoundTrip) {
  const ProbeReport oracle = probe_semismoothness(make_cone(4), ProbeMode::exact, {});

  ASSERT_EQ(run({"probe", "--n", "4", "--format", "json", "--out", path("r.json")}).code, 0);
  const ProbeReport j = probe_report_from_json(nlohmann::json::parse(slurp(path("r.json"))));
  EXPECT_EQ(j.residual_norms, oracle.residual_norms);
  EXPECT_EQ(j.fitted_slope, oracle.fitted_slope);

  ASSERT_EQ(run({"probe", "--n", "4", "--out", path("r.csv")}).code, 0);
  std::ifstream in(path("r.csv"));
  const ProbeCsv c = read_probe_csv(in);
  EXPECT_EQ(c.t_grid, oracle.t_grid);
  EXPECT_EQ(c.h_norms, oracle.h_norms);
  EXPECT_EQ(c.residual_norms, oracle.residual_norms);
  EXPECT_EQ(c.slope, oracle.fitted_slope);
}

TEST_F(Workdir, ProjectInSetPointIsUnchanged) {
  const std::string in = write("p.txt", "3\n0.1 -0.2 2 0.5 0.1 0.4 0.05\n");
  ASSERT_TRUE(membership_K(make_cone(3), parse_text<ConePoint>(slurp(in), read_cone_point)).member);
  const CliRun r = run({"project", "--target", "K", "--in", in, "--out", path("o.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const ConePoint p = parse_text<ConePoint>(slurp(in), read_cone_point);
  const ConePoint q = parse_text<ConePoint>(slurp(path("o.txt")), read_cone_point);
  EXPECT_LE((p - q).norm(), 10 * 1e-9);
  const SolveStats s = solve_stats_from_json(nlohmann::json::parse(r.out));
  EXPECT_TRUE(s.converged);
}

TEST_F(Workdir, ProjectPolarPointToApex) {
  std::ostringstream text;
  write_cone_point(text, curve_v(make_cone(2), 0.4));
  const std::string in = write("v.txt", text.str());
  const CliRun r = run({"project", "--target", "K", "--in", in});
  ASSERT_EQ(r.code, 0) << r.err;
  // stdout carries the point (two lines) followed by the stats line.
  const std::size_t split = r.out.find('\n', r.out.find('\n') + 1) + 1;
  const ConePoint p = parse_text<ConePoint>(r.out.substr(0, split), read_cone_point);
  EXPECT_TRUE(solve_stats_from_json(nlohmann::json::parse(r.out.substr(split))).converged);
  EXPECT_LE(p.norm(), 1e-8);

  const CliRun polar = run({"project", "--target", "polar", "--in", in, "--out", path("o.txt")});
  ASSERT_EQ(polar.code, 0);
  const ConePoint back = parse_text<ConePoint>(slurp(path("o.txt")), read_cone_point);
  EXPECT_LE((back - curve_v(make_cone(2), 0.4)).norm(), 1e-8);
}

TEST_F(Workdir, ProjectSliceSolversAgree) {
  Rng rng(61);
  std::ostringstream text;
  write_block_matrix(text, random_block_matrix(rng, 3));
  const std::string in = write("x.txt", text.str());
  ASSERT_EQ(run({"project", "--target", "slice-dykstra", "--in", in, "--out", path("d.txt")}).code,
            0);
  ASSERT_EQ(
      run({"project", "--target", "slice-fixedpoint", "--in", in, "--out", path("f.txt")}).code, 0);
  const auto d = parse_text<BlockSymMatrix>(slurp(path("d.txt")), read_block_matrix);
  const auto f = parse_text<BlockSymMatrix>(slurp(path("f.txt")), read_block_matrix);
  EXPECT_LE((d - f).frobenius_norm(), 1e-5);
}

TEST_F(Workdir, ProjectErrorPaths) {
  EXPECT_EQ(run({"project", "--in", path("missing.txt")}).code, 2);
  EXPECT_EQ(run({"project", "--in", write("bad.txt", "2\n1 2 3\n")}).code, 2);
  EXPECT_EQ(run({"project", "--target", "slice-dykstra", "--in", write("p.txt", "2\n1 2 3 4 5\n")})
                .code,
            2);
  EXPECT_EQ(run({"project", "--target", "nowhere", "--in", path("p.txt")}).code, 2);
  EXPECT_EQ(run({"project"}).code, 2);

  // Unreachable tolerance: exit 3 and the best iterate is still written.
  const CliRun r = run({"project", "--in", write("q.txt", "2\n1 -1 0.5 2 -3\n"), "--tol", "1e-300",
                     "--max-iter", "100", "--out", path("o.txt")});
  EXPECT_EQ(r.code, 3);
  const ConePoint best = parse_text<ConePoint>(slurp(path("o.txt")), read_cone_point);
  EXPECT_TRUE(best.finite());
  EXPECT_FALSE(solve_stats_from_json(nlohmann::json::parse(r.out)).converged);
}

TEST(CliVerify, DefaultRunPasses) {
  const CliRun r = run({"verify", "--jobs", "2"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("verify: n in [2, 6]"), std::string::npos);
  for (const char* g : {"symmat", "cones", "project", "slice", "probe"})
    EXPECT_NE(r.out.find(std::string("group ") + g + ": pass"), std::string::npos) << g;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(CliVerify, NMaxRestrictsConeSizes) {
  const CliRun r = run({"verify", "--n-max", "4", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("verify: n in [2, 4], seed=7"), std::string::npos);
  const CliRun full = run({"verify", "--seed", "7"});
  auto compared = [](const std::string& out) {
    const auto at = out.find(" points compared");
    const auto open = out.rfind('(', at);
    return std::stol(out.substr(open + 1, at - open - 1));
  };
  EXPECT_LT(compared(r.out), compared(full.out));
  EXPECT_EQ(run({"verify", "--n-max", "1"}).code, 2);
}

TEST(CliVerify, PerturbedProjectorIsDetected) {
  cli::CliHooks hooks;
  hooks.perturb = [](ConePoint& p) { p.x3() += 1e-4; };
  const CliRun r = run({"verify", "--n-max", "3"}, hooks);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL project"), std::string::npos);
  EXPECT_NE(r.out.find("verify: FAILED"), std::string::npos);
}

TEST(CliCurves, FivePointGridForNTwo) {
  const CliRun r = run({"curves", "--n", "2", "--points", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "t,v1,v2,v3,v4,v5,w1,w2,w3,w4,w5,vw_inner,h_norm,residual_norm");
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& row : rows) {
    ASSERT_EQ(row.size(), 14u);
    EXPECT_LE(std::abs(row[11]), 1e-12);
  }
}

TEST(CliCurves, EndpointsGiveExactCornerRows) {
  const CliRun r = run({"curves", "--n", "3", "--points", "5", "--endpoints"});
  ASSERT_EQ(r.code, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 7u);
  const std::vector<double> v0{0, 0, 1, -1, 0, 0, 0, 0};
  const std::vector<double> v1{1, 1, 0, -1, 0, 0, 0, 0};
  EXPECT_EQ(std::vector<double>(rows.front().begin(), rows.front().begin() + 8), v0);
  EXPECT_EQ(std::vector<double>(rows.back().begin(), rows.back().begin() + 8), v1);
  EXPECT_EQ(rows.front().back(), 0.0);
}

TEST(CliCurves, ResidualColumnMatchesProbe) {
  const CliRun curves = run({"curves", "--n", "4", "--points", "9", "--t-min", "1e-3"});
  const CliRun probe =
      run({"probe", "--n", "4", "--points", "9", "--t-min", "1e-3", "--format", "json"});
  ASSERT_EQ(curves.code, 0);
  ASSERT_EQ(probe.code, 0);
  const auto json = nlohmann::json::parse(probe.out.substr(0, probe.out.rfind("n=4")));
  const auto residuals = json["residual_norms"].get<std::vector<double>>();
  const auto h = json["h_norms"].get<std::vector<double>>();
  const auto rows = csv_rows(curves.out);
  ASSERT_EQ(rows.size(), residuals.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].back(), residuals[i]);
    EXPECT_EQ(rows[i][rows[i].size() - 2], h[i]);
  }
}

TEST(CliCurves, InvalidGridExitsTwo) {
  EXPECT_EQ(run({"curves", "--t-min", "0"}).code, 2);
  EXPECT_EQ(run({"curves", "--points", "1"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("probe"), std::string::npos);
}

TEST(Cli, LogLevelFromEnvironment) {
  ::setenv("SLICEPROJ_LOG", "info", 1);
  const CliRun r = run({"probe", "--n", "2"});
  ::unsetenv("SLICEPROJ_LOG");
  EXPECT_NE(r.err.find("[info] probe n=2"), std::string::npos) << r.err;
  EXPECT_EQ(run({"probe", "--n", "2"}).err, "");
}
