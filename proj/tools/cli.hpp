#pragma once

// sliceproj command-line front end. run_cli() takes the arguments after the
// program name and writes to the given streams, so tests can drive it
// in-process.
//
// Exit codes: 0 success, 1 probe slope outside tolerance or verify failure,
// 2 invalid configuration or unreadable input, 3 solver failure.

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sliceproj/sliceproj.hpp"

namespace sliceproj::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kSolverFailed = 3 };

inline constexpr double kExactSlopeTolerance = 0.05;
inline constexpr double kNumericSlopeTolerance = 0.1;

struct RunConfig {
  std::string command;
  int n = 2;
  std::string mode = "exact";
  GridSpec grid;
  SolverConfig solver;
  double fd_step = 1e-6;
  std::string target = "K";
  std::optional<std::string> input_path;
  std::optional<std::string> output_path;
  std::string format = "csv";
  std::uint64_t seed = VerifyOptions{}.seed;
  unsigned jobs = default_jobs();
  int n_max = 6;
  double sample_scale = 0.25;
  bool endpoints = false;
};

/// Test seams. `perturb` is forwarded to verify as a corrupted projector.
struct CliHooks {
  std::function<void(ConePoint&)> perturb;
};

namespace detail {

using sliceproj::detail::require;

inline std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("sliceproj", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SLICEPROJ_LOG")) {
    const std::string level = env;
    if (level == "error" || level == "warn" || level == "info" || level == "debug")
      log->set_level(spdlog::level::from_str(level));
  }
  return log;
}

// Output goes to --out when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path);
      if (!file_) throw InvalidInput("--out: cannot open '" + *path + "' for writing");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline std::string read_input(const RunConfig& cfg) {
  if (!cfg.input_path) throw InvalidInput("--in is required for this command");
  std::ifstream in(*cfg.input_path);
  if (!in) throw InvalidInput("--in: cannot open '" + *cfg.input_path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

inline void validate(const RunConfig& cfg) {
  require(cfg.n >= kMinConeIndex, "n must be >= 2");
  require(cfg.n <= kMaxConeIndex, "n must be <= 12");
  cfg.solver.validate();
  require(cfg.fd_step > 0.0 && std::isfinite(cfg.fd_step), "fd-step must be positive");
  require(cfg.jobs >= 1, "jobs must be >= 1");
}

inline int cmd_probe(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  validate(cfg);
  const ProbeMode mode = parse_probe_mode(cfg.mode);
  cfg.grid.validate();
  const ConeModel model = make_cone(cfg.n);
  log.info("probe n={} mode={} points={} t=[{}, {}]", cfg.n, cfg.mode, cfg.grid.points,
           cfg.grid.t_min, cfg.grid.t_max);
  const ProbeReport rep =
      probe_semismoothness(model, mode, cfg.grid, {cfg.solver, cfg.fd_step, cfg.jobs});

  if (cfg.output_path || cfg.format == "json") {
    Sink sink(cfg.output_path, out);
    if (cfg.format == "json")
      *sink << to_json(rep).dump(2) << '\n';
    else
      write_probe_csv(*sink, rep);
  }
  const double gap = std::abs(rep.fitted_slope - rep.target_lambda);
  out << "n=" << rep.n << " slope=" << format_real(rep.fitted_slope)
      << " implied_order=" << format_real(rep.implied_order)
      << " target=" << format_real(rep.target_order()) << " |Δ|=" << format_real(gap) << '\n';
  const double allowed = mode == ProbeMode::exact ? kExactSlopeTolerance : kNumericSlopeTolerance;
  if (gap > allowed) log.warn("slope misses lambda_n by {} (allowed {})", gap, allowed);
  return gap <= allowed ? kOk : kCheckFailed;
}

inline int cmd_project(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  validate(cfg);
  const std::string text = read_input(cfg);
  SolveStats stats;
  Sink sink(cfg.output_path, out);
  if (cfg.target == "K" || cfg.target == "polar") {
    const ConePoint q = parse_text<ConePoint>(text, read_cone_point);
    const ConeModel model = make_cone(q.n());
    const Solved<ConePoint> r =
        cfg.target == "K" ? project_K(model, q, cfg.solver) : project_polar(model, q, cfg.solver);
    write_cone_point(*sink, r.value);
    stats = r.stats;
  } else {
    const BlockSymMatrix x = parse_text<BlockSymMatrix>(text, read_block_matrix);
    const ConeModel model = make_cone(x.n());
    const Solved<BlockSymMatrix> r = cfg.target == "slice-dykstra"
                                         ? project_slice_dykstra(model, x, cfg.solver)
                                         : project_slice_fixedpoint(model, x, cfg.solver);
    write_block_matrix(*sink, r.value);
    stats = r.stats;
  }
  out << to_json(stats).dump() << '\n';
  log.info("project target={} iterations={} residual={}", cfg.target, stats.iterations,
           stats.final_residual);
  if (!stats.converged) {
    log.error("projection did not converge; best iterate written");
    return kSolverFailed;
  }
  return kOk;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, spdlog::logger& log,
                      const CliHooks& hooks) {
  cfg.solver.validate();
  require(cfg.n_max >= kMinConeIndex && cfg.n_max <= kMaxConeIndex,
          "n-max must lie in [2, 12]");
  require(cfg.sample_scale > 0.0 && cfg.sample_scale <= 1.0,
          "sample-scale must lie in (0, 1]");
  VerifyOptions opts;
  opts.n_max = cfg.n_max;
  opts.seed = cfg.seed;
  opts.jobs = cfg.jobs;
  opts.sample_scale = cfg.sample_scale;
  opts.solver = cfg.solver;
  opts.perturb = hooks.perturb;
  out << "verify: n in [2, " << cfg.n_max << "], seed=" << cfg.seed
      << ", sample-scale=" << format_real(cfg.sample_scale) << '\n';

  const std::vector<CheckResult> results = run_verify(opts);
  bool all = true;
  std::string group;
  for (const CheckResult& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.group << ": " << r.name
        << "  worst=" << format_real(r.worst) << " limit=" << format_real(r.limit);
    if (!r.note.empty()) out << "  (" << r.note << ")";
    out << '\n';
  }
  for (const CheckResult& r : results) {
    if (r.group == group) continue;
    group = r.group;
    bool ok = true;
    for (const CheckResult& s : results)
      if (s.group == group) ok = ok && s.passed;
    out << "group " << group << ": " << (ok ? "pass" : "fail") << '\n';
  }
  out << (all ? "verify: all checks passed" : "verify: FAILED") << '\n';
  return all ? kOk : kCheckFailed;
}

inline int cmd_curves(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  validate(cfg);
  std::vector<double> ts = log_grid(cfg.grid);
  if (cfg.endpoints) {
    ts.insert(ts.begin(), 0.0);
    ts.push_back(1.0);
  }
  const ConeModel model = make_cone(cfg.n);
  Sink sink(cfg.output_path, out);
  std::ostream& os = *sink;
  os << "t";
  for (const char* curve : {"v", "w"})
    for (int k = 0; k < model.dim(); ++k) os << ',' << curve << k + 1;
  os << ",vw_inner,h_norm,residual_norm\n";
  for (const double t : ts) {
    const ConePoint v = curve_v(model, t);
    const ConePoint w = curve_w(model, t);
    os << format_real(t);
    for (const ConePoint* p : {&v, &w})
      for (int k = 0; k < model.dim(); ++k) os << ',' << format_real(p->coords()[k]);
    os << ',' << format_real(dot(v, w)) << ',' << format_real(curve_step(model, t).norm()) << ','
       << format_real(sliceproj::detail::closed_form_residual(model, t).norm) << '\n';
  }
  log.info("curves n={} rows={}", cfg.n, ts.size());
  return kOk;
}

inline void add_solver_flags(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--tol", cfg.solver.tol, "solver tolerance");
  sub.add_option("--max-iter", cfg.solver.max_iter, "solver iteration cap");
  sub.add_option("--rho", cfg.solver.rho, "ADMM penalty");
  sub.add_option_function<double>(
      "--gamma-frac", [&cfg](double g) { cfg.solver.gamma_frac = g; },
      "fixed-point step as a fraction of 1/lambda_max(A*A)");
  sub.add_option("--jobs", cfg.jobs, "worker threads");
}

inline void add_grid_flags(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--n", cfg.n, "cone index n");
  sub.add_option("--t-min", cfg.grid.t_min, "smallest step parameter");
  sub.add_option("--t-max", cfg.grid.t_max, "largest step parameter");
  sub.add_option("--points", cfg.grid.points, "grid size");
  sub.add_option("--out", cfg.output_path, "output file");
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const CliHooks& hooks = {}) {
  RunConfig cfg;
  CLI::App app{"Projections onto LMI cones and semismoothness-order probes", "sliceproj"};
  app.require_subcommand(1);

  CLI::App* probe = app.add_subcommand("probe", "fit the residual exponent along the curve");
  detail::add_grid_flags(*probe, cfg);
  detail::add_solver_flags(*probe, cfg);
  probe->add_option("--mode", cfg.mode, "exact or numeric");
  probe->add_option("--fd-step", cfg.fd_step, "difference step for numeric mode");
  probe->add_option("--format", cfg.format, "report format")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* project = app.add_subcommand("project", "project a point or block matrix");
  detail::add_solver_flags(*project, cfg);
  project->add_option("--target", cfg.target, "projection target")
      ->check(CLI::IsMember({"K", "polar", "slice-dykstra", "slice-fixedpoint"}));
  project->add_option("--in", cfg.input_path, "input file")->required();
  project->add_option("--out", cfg.output_path, "output file");

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  detail::add_solver_flags(*verify, cfg);
  verify->add_option("--seed", cfg.seed, "sampling seed");
  verify->add_option("--n-max", cfg.n_max, "largest cone index checked");
  verify->add_option("--sample-scale", cfg.sample_scale, "fraction of the full sample counts");

  CLI::App* curves = app.add_subcommand("curves", "tabulate v(t), w(t) and the residual");
  detail::add_grid_flags(*curves, cfg);
  curves->add_flag("--endpoints", cfg.endpoints, "add rows for t = 0 and t = 1");

  auto log = detail::make_logger(err);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kBadConfig;
  }

  try {
    if (*probe) return detail::cmd_probe(cfg, out, *log);
    if (*project) return detail::cmd_project(cfg, out, *log);
    if (*verify) return detail::cmd_verify(cfg, out, *log, hooks);
    return detail::cmd_curves(cfg, out, *log);
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailed;
  } catch (const InvalidInput& e) {
    err << e.what() << '\n';
    return kBadConfig;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kSolverFailed;
  }
}

}  // namespace sliceproj::cli
