#pragma once

// Property checks over every module. Each check draws from its own seeded
// generator, evaluates an identity or an independent oracle, and reports the
// worst observed value against a fixed limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sliceproj/cones.hpp"
#include "sliceproj/parallel.hpp"
#include "sliceproj/probe.hpp"
#include "sliceproj/project.hpp"
#include "sliceproj/sampling.hpp"
#include "sliceproj/symmat.hpp"

namespace sliceproj {

struct CheckResult {
  std::string group;
  std::string name;
  bool passed = false;
  double worst = 0.0;  // observed statistic
  double limit = 0.0;  // pass threshold for `worst`
  std::string note;
};

struct VerifyOptions {
  int n_min = 2;
  int n_max = 6;
  std::uint64_t seed = 20260516;
  double sample_scale = 1.0;  // multiplies every sample count (floor of 1)
  unsigned jobs = 1;
  SolverConfig solver;
  // Applied to every Pi_K result inside the checks. Used to confirm that the
  // suite rejects wrong projections.
  std::function<void(ConePoint&)> perturb;
};

namespace detail {

inline CheckResult at_most(std::string group, std::string name, double worst, double limit,
                           std::string note = {}) {
  return {std::move(group), std::move(name), worst <= limit, worst, limit, std::move(note)};
}

inline int scaled(const VerifyOptions& o, int full) {
  return std::max(1, static_cast<int>(std::lround(full * o.sample_scale)));
}

inline std::vector<int> cone_range(const VerifyOptions& o, int lo, int hi) {
  std::vector<int> out;
  for (int n = std::max(lo, o.n_min); n <= std::min(hi, o.n_max); ++n) out.push_back(n);
  return out;
}

inline Rng rng_for(const VerifyOptions& o, std::uint64_t stream) {
  return Rng(o.seed * 0x9E3779B97F4A7C15ULL + stream);
}

inline Solved<ConePoint> checked_project_K(const VerifyOptions& o, const ConeModel& m,
                                           const ConePoint& q) {
  Solved<ConePoint> r = project_K(m, q, o.solver);
  if (o.perturb) o.perturb(r.value);
  return r;
}

inline double rel_sym2_error(Sym2 got, Sym2 want) {
  return norm(got - want) / std::max(1.0, norm(want));
}

}  // namespace detail

// ---- symmat ---------------------------------------------------------------

inline std::vector<CheckResult> check_symmat(const VerifyOptions& o) {
  Rng rng = detail::rng_for(o, 1);
  double recon2 = 0.0, reconj = 0.0, idem = 0.0, nonexp = 0.0;
  for (int k = 0; k < detail::scaled(o, 1000); ++k) {
    const Sym2 m = std::exp(2.0 * gaussian(rng)) * random_sym2(rng);
    recon2 = std::max(recon2, norm(eig2(m).reconstruct() - m) / std::max(norm(m), 1e-300));
    const Sym2 p = psd_project_2(m);
    idem = std::max(idem, detail::rel_sym2_error(psd_project_2(p), p));
    const Sym2 m2 = random_sym2(rng);
    nonexp = std::max(nonexp, norm(p - psd_project_2(m2)) - norm(m - m2));
  }
  for (int k = 0; k < detail::scaled(o, 40); ++k) {
    const SymMatrix m = random_sym_matrix(rng, 1 + k % 24);
    const SymEigen e = jacobi_eig(m);
    const Eigen::MatrixXd back =
        e.vectors * Eigen::Map<const Eigen::VectorXd>(e.values.data(), m.dim()).asDiagonal() *
        e.vectors.transpose();
    reconj = std::max(reconj, (back - m.dense()).norm() / m.frobenius_norm());
  }
  return {detail::at_most("symmat", "2x2 spectral reconstruction", recon2, 1e-12),
          detail::at_most("symmat", "Jacobi reconstruction", reconj, 1e-11),
          detail::at_most("symmat", "PSD projection idempotence", idem, 1e-12),
          detail::at_most("symmat", "PSD projection nonexpansiveness", nonexp, 1e-12)};
}

/// Blockwise PSD projection against the Jacobi projection of the assembled matrix.
inline CheckResult check_block_full_agreement(const VerifyOptions& o, int samples = 100) {
  Rng rng = detail::rng_for(o, 2);
  const auto ns = detail::cone_range(o, 2, 6);
  double worst = 0.0;
  for (int k = 0; k < detail::scaled(o, samples); ++k) {
    const int n = ns[static_cast<std::size_t>(k) % ns.size()];
    const BlockSymMatrix m = random_block_matrix(rng, n);
    const SymMatrix blockwise = psd_project_block(m).assemble();
    const SymMatrix full = psd_project_full(m.assemble());
    worst = std::max(worst, (blockwise.dense() - full.dense()).norm() /
                                std::max(1.0, m.frobenius_norm()));
  }
  return detail::at_most("symmat", "blockwise vs full-matrix PSD projection", worst, 1e-10);
}

// ---- cones ----------------------------------------------------------------

inline std::vector<CheckResult> check_cones(const VerifyOptions& o) {
  Rng rng = detail::rng_for(o, 3);
  double adjoint = 0.0;
  long disagreements = 0;
  long compared = 0;
  for (int n : detail::cone_range(o, 2, 6)) {
    const ConeModel m = make_cone(n);
    for (int k = 0; k < detail::scaled(o, 100); ++k) {
      const ConePoint p = random_point(rng, n);
      const BlockSymMatrix x = random_block_matrix(rng, n);
      const double gap = std::abs(inner(lmi_apply(m, p), x) - dot(p, lmi_adjoint(m, x)));
      adjoint = std::max(adjoint, gap / (p.norm() * x.frobenius_norm()));
    }
    for (int k = 0; k < detail::scaled(o, 1000); ++k) {
      ConePoint p = random_cone_member(rng, n);
      if (k % 3 == 1) p = p + 0.05 * random_point(rng, n);
      if (k % 3 == 2) p = random_point(rng, n);
      const double lo = min_block_eigenvalue(lmi_apply(m, p));
      if (std::abs(lo) <= 1e-6 * (1.0 + p.norm())) continue;  // too close to call
      ++compared;
      if (membership_K(m, p).member != (lo >= -1e-9)) ++disagreements;
    }
  }
  return {detail::at_most("cones", "adjoint consistency (relative)", adjoint, 1e-12),
          detail::at_most("cones", "membership: inequalities vs LMI disagreements",
                          static_cast<double>(disagreements), 0.0,
                          std::to_string(compared) + " points compared")};
}

/// v(t) in K_n° (Pi_K(v) = 0), w(t) in K_n and orthogonal to v(t).
inline std::vector<CheckResult> check_curves(const VerifyOptions& o, int points = 50) {
  double polar = 0.0, member = 0.0, ortho = 0.0, closed = 0.0;
  for (int n : detail::cone_range(o, 2, 6)) {
    const ConeModel m = make_cone(n);
    for (int k = 0; k < points; ++k) {
      const double t = static_cast<double>(k) / (points - 1);
      const ConePoint v = curve_v(m, t);
      const ConePoint w = curve_w(m, t);
      polar = std::max(polar, detail::checked_project_K(o, m, v).value.norm());
      member = std::max(member, membership_K(m, w, 0.0).worst_violation);
      ortho = std::max(ortho, std::abs(dot(v, w)));
    }
    const std::vector<double> grid = log_grid({1e-4, 0.9, points});
    for (const double t : grid) {
      const double want = curve_step_inner(m, t);
      closed = std::max(closed, std::abs(dot(curve_step(m, t), curve_w(m, t)) - want) / want);
    }
  }
  return {detail::at_most("cones", "curve v(t) lies in the polar cone: |Pi_K(v)|", polar, 1e-6),
          detail::at_most("cones", "curve w(t) lies in K_n: worst violation", member, 1e-10),
          detail::at_most("cones", "<v(t), w(t)> = 0", ortho, 1e-12),
          detail::at_most("cones", "<v(t)-v(0), w(t)> closed form (relative)", closed, 1e-13)};
}

/// Hoelder's inequality and its equality case |x_i|^p = c |y_i|^q.
inline std::vector<CheckResult> check_holder(const VerifyOptions& o, int samples = 1000,
                                             int equality_samples = 100) {
  Rng rng = detail::rng_for(o, 4);
  const double exponents[] = {4.0 / 3.0, 2.0, 4.0};
  auto scale_of = [](std::span<const double> x, std::span<const double> y, double p) {
    const double q = p / (p - 1.0);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += std::pow(std::abs(x[i]), p);
      sy += std::pow(std::abs(y[i]), q);
    }
    return std::max(std::pow(sx, 1.0 / p) * std::pow(sy, 1.0 / q), 1e-300);
  };
  double negative = 0.0;
  for (int k = 0; k < detail::scaled(o, samples); ++k) {
    const double p = exponents[k % 3];
    const std::size_t len = 1 + static_cast<std::size_t>(k % 8);
    std::vector<double> x(len), y(len);
    for (std::size_t i = 0; i < len; ++i) {
      x[i] = gaussian(rng);
      y[i] = gaussian(rng);
    }
    negative = std::max(negative, -holder_gap(x, y, p) / scale_of(x, y, p));
  }
  double equality = 0.0;
  for (int k = 0; k < detail::scaled(o, equality_samples); ++k) {
    const double p = exponents[k % 3];
    const double q = p / (p - 1.0);
    const double c = std::exp(gaussian(rng));
    const std::size_t len = 1 + static_cast<std::size_t>(k % 8);
    std::vector<double> x(len), y(len);
    for (std::size_t i = 0; i < len; ++i) {
      y[i] = gaussian(rng);
      x[i] = std::copysign(std::pow(c * std::pow(std::abs(y[i]), q), 1.0 / p), gaussian(rng));
    }
    equality = std::max(equality, std::abs(holder_gap(x, y, p)) / scale_of(x, y, p));
  }
  return {detail::at_most("cones", "Hoelder gap >= 0 (worst negative part, relative)", negative,
                          1e-12),
          detail::at_most("cones", "Hoelder equality case (relative gap)", equality, 1e-12)};
}

// ---- project --------------------------------------------------------------

/// Moreau decomposition, optimality, idempotence and nonexpansiveness of Pi_K.
inline std::vector<CheckResult> check_moreau(const VerifyOptions& o, int samples = 200) {
  const double tol = o.solver.tol;
  double decomposition = 0.0, orthogonality = 0.0, feasibility = 0.0, variational = 0.0;
  double idempotence = 0.0, nonexpansive = 0.0;
  long failures = 0;
  for (int n : detail::cone_range(o, 2, 5)) {
    const ConeModel m = make_cone(n);
    Rng rng = detail::rng_for(o, 100 + static_cast<std::uint64_t>(n));
    const int count = detail::scaled(o, samples);
    std::vector<ConePoint> qs;
    for (int k = 0; k < count; ++k) qs.push_back(std::exp(gaussian(rng)) * random_point(rng, n));
    std::vector<std::vector<ConePoint>> probes(static_cast<std::size_t>(count));
    for (auto& c : probes)
      for (int j = 0; j < 5; ++j) c.push_back(random_cone_member(rng, n));

    struct Outcome {
      ConePoint pk;
      double decomposition = 0, orthogonality = 0, feasibility = 0, variational = 0,
             idempotence = 0;
      bool converged = true;
    };
    const auto outcomes = parallel_map(qs.size(), o.jobs, [&](std::size_t i) {
      Outcome r;
      const ConePoint& q = qs[i];
      const Solved<ConePoint> k = detail::checked_project_K(o, m, q);
      r.converged = k.stats.converged;
      r.pk = k.value;
      const ConePoint pp = q - k.value;
      const double qq = dot(q, q);
      r.decomposition = std::abs(dot(k.value, k.value) + dot(pp, pp) - qq) / qq;
      r.orthogonality = std::abs(dot(k.value, pp)) / qq;
      r.feasibility = std::max(0.0, -min_block_eigenvalue(lmi_apply(m, k.value))) /
                      std::max(1.0, q.norm());
      for (const ConePoint& c : probes[i]) {
        const ConePoint dc = c - k.value;
        const double denom = pp.norm() * dc.norm();
        if (denom > 0.0) r.variational = std::max(r.variational, dot(pp, dc) / denom);
      }
      const Solved<ConePoint> again = detail::checked_project_K(o, m, k.value);
      r.idempotence = (again.value - k.value).norm() / std::max(1.0, q.norm());
      return r;
    });
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const Outcome& r = outcomes[i];
      failures += r.converged ? 0 : 1;
      decomposition = std::max(decomposition, r.decomposition);
      orthogonality = std::max(orthogonality, r.orthogonality);
      feasibility = std::max(feasibility, r.feasibility);
      variational = std::max(variational, r.variational);
      idempotence = std::max(idempotence, r.idempotence);
      if (i > 0) {
        nonexpansive = std::max(nonexpansive, (r.pk - outcomes[i - 1].pk).norm() -
                                                  (qs[i] - qs[i - 1]).norm());
      }
    }
  }
  return {
      detail::at_most("project", "solver non-convergence count", static_cast<double>(failures), 0),
      detail::at_most("project", "Moreau: |Pi_K|^2 + |Pi_K°|^2 = |q|^2 (relative)", decomposition,
                      100 * tol),
      detail::at_most("project", "Moreau: <Pi_K, Pi_K°> (relative)", orthogonality, 100 * tol),
      detail::at_most("project", "Pi_K(q) feasibility: -min eig", feasibility, 10 * tol),
      detail::at_most("project", "variational inequality (cosine)", variational, 10 * tol),
      detail::at_most("project", "idempotence", idempotence, 10 * tol),
      detail::at_most("project", "nonexpansiveness violation", nonexpansive, 100 * tol)};
}

/// project_polar(v(t) + a w(t)) = v(t): the normal cone at v(t) is spanned by w(t).
inline CheckResult check_normal_ray(const VerifyOptions& o) {
  double worst = 0.0;
  for (int n : detail::cone_range(o, 2, 4)) {
    const ConeModel m = make_cone(n);
    for (const double t : {0.1, 0.5, 0.9}) {
      for (const double alpha : {0.1, 1.0}) {
        const NormalRay ray = normal_ray(m, t);
        const ConePoint q = ray.base + alpha * ray.generator;
        const ConePoint polar = q - detail::checked_project_K(o, m, q).value;
        worst = std::max(worst, (polar - ray.base).norm());
      }
    }
  }
  return detail::at_most("project", "normal ray: |Pi_K°(v + a w) - v|", worst, 1e-5);
}

/// Dykstra against the fixed-point projector onto T_n, and gamma-independence.
inline std::vector<CheckResult> check_slice(const VerifyOptions& o, int samples = 20) {
  double agreement = 0.0, gamma_spread = 0.0, membership = 0.0;
  long failures = 0;
  for (int n : detail::cone_range(o, 2, 3)) {
    const ConeModel m = make_cone(n);
    Rng rng = detail::rng_for(o, 200 + static_cast<std::uint64_t>(n));
    std::vector<BlockSymMatrix> xs;
    for (int k = 0; k < detail::scaled(o, samples); ++k) xs.push_back(random_block_matrix(rng, n));
    struct Outcome {
      double agreement = 0, spread = 0, membership = 0;
      bool converged = true;
    };
    const auto outcomes = parallel_map(xs.size(), o.jobs, [&](std::size_t i) {
      Outcome r;
      const auto dykstra = project_slice_dykstra(m, xs[i], o.solver);
      const auto fixed = project_slice_fixedpoint(m, xs[i], o.solver);
      r.converged = dykstra.stats.converged && fixed.stats.converged;
      r.agreement = (dykstra.value - fixed.value).frobenius_norm();
      r.membership = std::max(0.0, -min_block_eigenvalue(dykstra.value)) /
                     std::max(1.0, xs[i].frobenius_norm());
      std::vector<BlockSymMatrix> sweep;
      for (const double frac : {0.3, 0.6, 0.9}) {
        SolverConfig cfg = o.solver;
        cfg.gamma_frac = frac;
        const auto s = project_slice_fixedpoint(m, xs[i], cfg);
        r.converged = r.converged && s.stats.converged;
        sweep.push_back(s.value);
      }
      for (std::size_t a = 0; a < sweep.size(); ++a)
        for (std::size_t b = a + 1; b < sweep.size(); ++b)
          r.spread = std::max(r.spread, (sweep[a] - sweep[b]).frobenius_norm());
      return r;
    });
    for (const Outcome& r : outcomes) {
      failures += r.converged ? 0 : 1;
      agreement = std::max(agreement, r.agreement);
      gamma_spread = std::max(gamma_spread, r.spread);
      membership = std::max(membership, r.membership);
    }
  }
  return {
      detail::at_most("slice", "solver non-convergence count", static_cast<double>(failures), 0),
      detail::at_most("slice", "Dykstra vs fixed-point distance", agreement, 1e-5),
      detail::at_most("slice", "fixed point spread over gamma", gamma_spread, 1e-6),
      detail::at_most("slice", "Dykstra output PSD: -min eig", membership, 10 * o.solver.tol)};
}

// ---- probe ----------------------------------------------------------------

inline std::vector<ProbeReport> exact_reports(const VerifyOptions& o, int lo = 2, int hi = 6) {
  std::vector<ProbeReport> out;
  for (int n : detail::cone_range(o, lo, hi))
    out.push_back(probe_semismoothness(make_cone(n), ProbeMode::exact, GridSpec{}));
  return out;
}

inline std::vector<CheckResult> check_probe_exact(const VerifyOptions& o) {
  const auto reports = exact_reports(o);
  double slope = 0.0, sandwich = 0.0, fit = 0.0, step_hi = 0.0, step_lo = 0.0;
  bool decreasing = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ProbeReport& r = reports[i];
    slope = std::max(slope, std::abs(r.fitted_slope - r.target_lambda));
    fit = std::max(fit, r.max_abs_log_deviation);
    double c1 = INFINITY, c2 = 0.0;
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) {
      const double ratio = r.residual_norms[k] / std::pow(r.t_grid[k], r.target_lambda);
      c1 = std::min(c1, ratio);
      c2 = std::max(c2, ratio);
      step_hi = std::max(step_hi, r.h_norms[k] / r.t_grid[k]);
      step_lo = std::max(step_lo, 1.0 - r.h_norms[k] / r.t_grid[k]);
    }
    sandwich = std::max(sandwich, c2 / c1);
    if (i > 0 && !(r.implied_order < reports[i - 1].implied_order)) decreasing = false;
  }
  return {detail::at_most("probe", "exact slope vs lambda_n", slope, 0.02),
          detail::at_most("probe", "implied order strictly decreasing in n", decreasing ? 0 : 1, 0),
          detail::at_most("probe", "scaling sandwich c2/c1", sandwich, 2.0),
          detail::at_most("probe", "fit quality: max |log deviation|", fit, 0.05),
          detail::at_most("probe", "|h|/t upper bound", step_hi, std::sqrt(2.0)),
          detail::at_most("probe", "|h|/t lower bound (1 - ratio)", step_lo, 1e-12)};
}

/// Solver-based residuals against the closed form at a few step parameters.
inline CheckResult check_probe_numeric(const VerifyOptions& o,
                                       std::vector<double> ts = {1e-3, 1e-2, 1e-1}) {
  double worst = 0.0;
  for (int n : detail::cone_range(o, 2, 3)) {
    const ConeModel m = make_cone(n);
    for (const double t : ts) {
      // The perturbation hook acts through an explicit finite difference.
      const ConePoint v = curve_v(m, t);
      const ConePoint h = curve_step(m, t);
      const double s = 1e-6;
      const ConePoint q = v + s * h;
      const ConePoint polar = q - detail::checked_project_K(o, m, q).value;
      const double numeric = (h - (1.0 / s) * (polar - v)).norm();
      const double exact = residual_exact(m, t).norm;
      worst = std::max(worst, std::abs(numeric - exact) / exact);
    }
  }
  return detail::at_most("probe", "numeric vs exact residual (relative)", worst, 0.05);
}

/// Every group at the given sample scale.
inline std::vector<CheckResult> run_verify(const VerifyOptions& o) {
  std::vector<CheckResult> all;
  auto append = [&](std::vector<CheckResult> r) { all.insert(all.end(), r.begin(), r.end()); };
  append(check_symmat(o));
  all.push_back(check_block_full_agreement(o));
  append(check_cones(o));
  append(check_curves(o));
  append(check_holder(o));
  append(check_moreau(o));
  all.push_back(check_normal_ray(o));
  append(check_slice(o));
  append(check_probe_exact(o));
  all.push_back(check_probe_numeric(o));
  return all;
}

}  // namespace sliceproj
