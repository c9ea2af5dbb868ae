#pragma once

// Semismoothness-order probe for Pi_{K_n°} along the curve v(t).
//
// With x = v(0) and h = v(t) - v(0), the measured quantity is the residual
//   r(t) = f(x + h) - f(x) - f'(x + h; h),   f = Pi_{K_n°}.
// Both curve points are fixed points of f, so r(t) = h - f'(v(t); h), and
// the directional derivative is the projection of h onto the tangent cone
// {d : <d, w(t)> <= 0}. Hence r(t) = <h, w>/|w|^2 w = Theta(t^lambda).

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "sliceproj/cones.hpp"
#include "sliceproj/error.hpp"
#include "sliceproj/parallel.hpp"
#include "sliceproj/project.hpp"

namespace sliceproj {

enum class ProbeMode { exact, numeric };

inline std::string_view to_string(ProbeMode m) { return m == ProbeMode::exact ? "exact" : "numeric"; }

inline ProbeMode parse_probe_mode(std::string_view s) {
  if (s == "exact") return ProbeMode::exact;
  if (s == "numeric") return ProbeMode::numeric;
  throw InvalidInput("mode must be exact or numeric");
}

struct GridSpec {
  double t_min = 1e-4;
  double t_max = 1e-1;
  int points = 20;

  void validate() const {
    detail::require(std::isfinite(t_min) && std::isfinite(t_max) && t_min > 0.0 && t_max < 1.0,
                    "t-min and t-max must lie in (0, 1)");
    detail::require(t_min < t_max, "t-min must be below t-max");
    detail::require(points >= 5, "points must be >= 5");
  }
};

/// Log-spaced, strictly increasing, endpoints included exactly.
inline std::vector<double> log_grid(const GridSpec& g) {
  g.validate();
  std::vector<double> t(static_cast<std::size_t>(g.points));
  const double lo = std::log(g.t_min);
  const double hi = std::log(g.t_max);
  for (int k = 0; k < g.points; ++k)
    t[k] = std::exp(lo + (hi - lo) * k / (g.points - 1));
  t.front() = g.t_min;
  t.back() = g.t_max;
  return t;
}

struct Residual {
  ConePoint vector;
  double norm = 0.0;
};

namespace detail {

inline void require_open_unit(double t, const char* who) {
  require(std::isfinite(t) && t > 0.0 && t < 1.0, std::string(who) + ": t must lie in (0,1)");
}

// Closed-form residual; valid on the closed interval [0, 1].
inline Residual closed_form_residual(const ConeModel& model, double t) {
  const double inner_hw = curve_step_inner(model, t);
  const ConePoint w = curve_w(model, t);
  const double ww = dot(w, w);
  return {(inner_hw / ww) * w, inner_hw / std::sqrt(ww)};
}

}  // namespace detail

inline Residual residual_exact(const ConeModel& model, double t) {
  detail::require_open_unit(t, "residual_exact");
  return detail::closed_form_residual(model, t);
}

struct NumericResidual {
  ConePoint vector;            // finite-difference variant
  double norm = 0.0;           // |vector|
  double analytic_norm = 0.0;  // tangent-cone variant
  double discrepancy = 0.0;    // |finite-difference - tangent-cone|
  SolveStats stats;            // accumulated over the three projections
};

/// Residual with Pi_{K_n°} evaluated by the solver. The directional derivative
/// is taken two ways: analytically through the normal ray, and by a one-sided
/// difference quotient of step fd_step.
inline NumericResidual residual_numeric(const ConeModel& model, double t,
                                        const SolverConfig& cfg = {}, double fd_step = 1e-6) {
  detail::require_open_unit(t, "residual_numeric");
  detail::require(fd_step > 0.0 && std::isfinite(fd_step), "fd-step must be positive");

  NumericResidual out;
  out.stats.converged = true;
  auto account = [&](const SolveStats& s) {
    out.stats.iterations += s.iterations;
    out.stats.final_residual = std::max(out.stats.final_residual, s.final_residual);
  };

  const ConePoint h = curve_step(model, t);
  for (const double at : {0.0, t}) {
    const ConePoint v = curve_v(model, at);
    const Solved<ConePoint> fixed = project_polar(model, v, cfg);
    account(fixed.stats);
    if (!fixed.stats.converged)
      throw SolverFailure("polar projection did not converge at t=" + std::to_string(at),
                          out.stats);
    if ((fixed.value - v).norm() > 10.0 * cfg.tol * std::max(1.0, v.norm()))
      throw SolverFailure("v(" + std::to_string(at) + ") is not a fixed point of the polar projection",
                          out.stats);
  }

  const NormalRay ray = normal_ray(model, t);
  const ConePoint analytic = h - tangent_project(ray, h);

  const Solved<ConePoint> moved = project_polar(model, ray.base + fd_step * h, cfg);
  account(moved.stats);
  if (!moved.stats.converged)
    throw SolverFailure("polar projection did not converge at the difference point", out.stats);
  const ConePoint derivative = (1.0 / fd_step) * (moved.value - ray.base);

  out.vector = h - derivative;
  out.norm = out.vector.norm();
  out.analytic_norm = analytic.norm();
  out.discrepancy = (out.vector - analytic).norm();
  return out;
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_abs_log_deviation = 0.0;
};

/// Least squares of log(residual) against log(t).
inline ExponentFit fit_exponent(std::span<const double> t, std::span<const double> residual) {
  detail::require(t.size() == residual.size(), "fit_exponent: length mismatch");
  detail::require(t.size() >= 5, "fit_exponent: need at least 5 points");
  const std::size_t k = t.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    detail::require(t[i] > 0.0, "fit_exponent: step parameters must be positive");
    detail::require(residual[i] > 0.0 && std::isfinite(residual[i]),
                    "fit_exponent: residuals must be positive");
    lx[i] = std::log(t[i]);
    ly[i] = std::log(residual[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  detail::require(sxx > 0.0, "fit_exponent: step parameters must not all coincide");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < k; ++i)
    fit.max_abs_log_deviation =
        std::max(fit.max_abs_log_deviation, std::abs(ly[i] - (fit.slope * lx[i] + fit.intercept)));
  return fit;
}

struct ProbeReport {
  int n = 0;
  ProbeMode mode = ProbeMode::exact;
  std::vector<double> t_grid;
  std::vector<double> h_norms;
  std::vector<double> residual_norms;
  double fitted_slope = 0.0;
  double intercept = 0.0;
  double max_abs_log_deviation = 0.0;
  double implied_order = 0.0;  // fitted_slope - 1
  double target_lambda = 0.0;  // lambda_n; the order bound is lambda_n - 1

  [[nodiscard]] double target_order() const { return target_lambda - 1.0; }
};

struct ProbeOptions {
  SolverConfig solver;
  double fd_step = 1e-6;
  unsigned jobs = 1;
};

inline ProbeReport probe_semismoothness(const ConeModel& model, ProbeMode mode,
                                        const GridSpec& grid, const ProbeOptions& opts = {}) {
  ProbeReport rep;
  rep.n = model.n;
  rep.mode = mode;
  rep.t_grid = log_grid(grid);
  rep.target_lambda = model.lambda;
  if (mode == ProbeMode::numeric) opts.solver.validate();

  const auto norms = parallel_map(rep.t_grid.size(), opts.jobs, [&](std::size_t i) {
    const double t = rep.t_grid[i];
    return mode == ProbeMode::exact ? residual_exact(model, t).norm
                                    : residual_numeric(model, t, opts.solver, opts.fd_step).norm;
  });
  rep.residual_norms.assign(norms.begin(), norms.end());
  for (const double t : rep.t_grid) rep.h_norms.push_back(curve_step(model, t).norm());

  const ExponentFit fit = fit_exponent(rep.t_grid, rep.residual_norms);
  rep.fitted_slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.max_abs_log_deviation = fit.max_abs_log_deviation;
  rep.implied_order = fit.slope - 1.0;
  return rep;
}

}  // namespace sliceproj
