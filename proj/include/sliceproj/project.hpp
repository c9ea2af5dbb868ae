#pragma once

// Metric projections onto K_n, its polar, and the PSD slice T_n = A K_n.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "sliceproj/cones.hpp"
#include "sliceproj/error.hpp"
#include "sliceproj/symmat.hpp"

namespace sliceproj {

struct SolverConfig {
  double tol = 1e-9;
  long max_iter = 200000;
  double rho = 1.0;
  double over_relax = 1.0;             // ADMM relaxation, in [1, 1.8]
  std::optional<double> gamma_frac;    // fixed-point step as a fraction of 1/lambda_max(A*A)
  bool polish = true;                  // semismooth-Newton refinement after ADMM
  int max_polish_steps = 120;

  void validate() const {
    detail::require(tol > 0.0 && std::isfinite(tol), "tol must be positive");
    detail::require(max_iter >= 1, "max-iter must be >= 1");
    detail::require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
    detail::require(over_relax >= 1.0 && over_relax <= 1.8, "over-relax must lie in [1, 1.8]");
    if (gamma_frac)
      detail::require(*gamma_frac > 0.0 && *gamma_frac < 1.0, "gamma-frac must lie in (0, 1)");
    detail::require(max_polish_steps >= 0, "polish step count must be >= 0");
  }
};

struct SolveStats {
  long iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

/// A solver that was required to converge did not; carries its statistics.
class SolverFailure : public NumericFailure {
 public:
  SolverFailure(const std::string& what, SolveStats stats)
      : NumericFailure(what), stats_(stats) {}
  [[nodiscard]] const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
};

template <typename T>
struct Solved {
  T value;
  SolveStats stats;
};

namespace detail {

inline Eigen::VectorXd psd_project_svec(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index k = 0; k < v.size(); k += 3) {
    const Sym2 p = psd_project_2({v[k], v[k + 1] / std::numbers::sqrt2, v[k + 2]});
    out[k] = p.a;
    out[k + 1] = std::numbers::sqrt2 * p.b;
    out[k + 2] = p.c;
  }
  return out;
}

inline Sym2 svec_block(const Eigen::VectorXd& v, Eigen::Index k) {
  return {v[k], v[k + 1] / std::numbers::sqrt2, v[k + 2]};
}

// Natural-map residual of the projection KKT system
//   p - q - A^T lam = 0,   A p - Pi_{S+}(A p - lam) = 0,
// with lam >= 0 the multiplier of A p >= 0.
inline Eigen::VectorXd kkt_map(const ConeModel& m, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& p, const Eigen::VectorXd& lam) {
  const Eigen::Index d = p.size();
  Eigen::VectorXd f(d + lam.size());
  f.head(d) = p - q - m.lmi.transpose() * lam;
  const Eigen::VectorXd ap = m.lmi * p;
  f.tail(lam.size()) = ap - psd_project_svec(ap - lam);
  return f;
}

struct KktPoint {
  Eigen::VectorXd p;
  Eigen::VectorXd lam;
  double residual = std::numeric_limits<double>::infinity();
  int steps = 0;
};

// Full-step semismooth Newton on kkt_map. Runs until the residual reaches
// the roundoff floor or stops improving, and returns the best iterate seen.
inline KktPoint newton_polish(const ConeModel& m, const Eigen::VectorXd& q, KktPoint start,
                              int max_steps, double floor) {
  const Eigen::Index d = start.p.size();
  const Eigen::Index s = start.lam.size();
  KktPoint best = start;
  best.residual = kkt_map(m, q, start.p, start.lam).norm();
  KktPoint cur = best;
  int stalled = 0;
  Eigen::MatrixXd jac(d + s, d + s);
  for (int step = 1; step <= max_steps && best.residual > floor && stalled < 8; ++step) {
    const Eigen::VectorXd f = kkt_map(m, q, cur.p, cur.lam);
    const Eigen::VectorXd ap = m.lmi * cur.p;
    jac.setZero();
    jac.topLeftCorner(d, d).setIdentity();
    jac.topRightCorner(d, s) = -m.lmi.transpose();
    for (Eigen::Index k = 0; k < s; k += 3) {
      const Eigen::Matrix3d dp = psd_project_2_jacobian(svec_block(ap - cur.lam, k));
      jac.block(d + k, 0, 3, d) = (Eigen::Matrix3d::Identity() - dp) * m.lmi.middleRows(k, 3);
      jac.block(d + k, d + k, 3, 3) = dp;
    }
    const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-f);
    if (!delta.allFinite()) break;
    cur.p += delta.head(d);
    cur.lam += delta.tail(s);
    cur.residual = kkt_map(m, q, cur.p, cur.lam).norm();
    cur.steps = step;
    if (cur.residual < best.residual) {
      best = cur;
      stalled = 0;
    } else {
      ++stalled;
    }
  }
  best.steps = cur.steps;
  return best;
}

}  // namespace detail

/// Pi_{K_n}(q). ADMM on (p, Z) with Z = A p in S_+, refined by Newton polishing
/// on the KKT system. final_residual is the KKT natural residual over max(1, |q|)
/// (with polishing off, the ADMM primal/dual residual over the same scale).
inline Solved<ConePoint> project_K(const ConeModel& model, const ConePoint& q,
                                   const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require(q.n() == model.n, "project_K: point/model n mismatch");
  detail::require(q.finite(), "project_K: non-finite input");
  if (q.coords().isZero(0.0)) return {ConePoint(model.n), {0, 0.0, true}};

  const Eigen::MatrixXd& a = model.lmi;
  const Eigen::VectorXd& qv = q.coords();
  const double scale = std::max(1.0, qv.norm());
  const double rho = cfg.rho;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> own_factor;
  if (rho != 1.0)
    own_factor.emplace(Eigen::MatrixXd::Identity(model.dim(), model.dim()) +
                       rho * model.gram.dense());
  const Eigen::LLT<Eigen::MatrixXd>& factor = own_factor ? *own_factor : model.admm_factor;

  Eigen::VectorXd p = Eigen::VectorXd::Zero(model.dim());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(model.svec_dim());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.svec_dim());

  detail::KktPoint best{p, Eigen::VectorXd::Zero(model.svec_dim())};
  best.residual = detail::kkt_map(model, qv, best.p, best.lam).norm();
  long polish_at = 50;
  long iter = 0;
  auto finish = [&](bool converged) {
    return Solved<ConePoint>{ConePoint(model.n, best.p),
                             {iter, best.residual / scale, converged}};
  };

  for (iter = 1; iter <= cfg.max_iter; ++iter) {
    p = factor.solve(qv + rho * a.transpose() * (z - u));
    const Eigen::VectorXd ap = a * p;
    const Eigen::VectorXd relaxed = cfg.over_relax * ap + (1.0 - cfg.over_relax) * z;
    const Eigen::VectorXd z_prev = z;
    z = detail::psd_project_svec(relaxed + u);
    u += relaxed - z;

    const double primal = (ap - z).norm();
    const double dual = rho * (a.transpose() * (z - z_prev)).norm();
    const bool admm_done = std::max(primal, dual) <= cfg.tol * scale;
    if (!admm_done && iter != polish_at && iter != cfg.max_iter) continue;

    detail::KktPoint candidate{p, -rho * u};
    candidate.residual = detail::kkt_map(model, qv, p, candidate.lam).norm();
    if (cfg.polish) {
      candidate = detail::newton_polish(model, qv, candidate, cfg.max_polish_steps,
                                        1e-15 * scale);
    }
    if (candidate.residual < best.residual) best = candidate;
    if (best.residual <= cfg.tol * scale) return finish(true);
    if (admm_done && !cfg.polish) {
      // Unpolished runs report the ADMM stopping pair instead.
      return {ConePoint(model.n, p), {iter, std::max(primal, dual) / scale, true}};
    }
    polish_at *= 2;
  }
  iter = cfg.max_iter;
  return finish(false);
}

/// Pi_{K_n°}(q) = q - Pi_{K_n}(q).
inline Solved<ConePoint> project_polar(const ConeModel& model, const ConePoint& q,
                                       const SolverConfig& cfg = {}) {
  Solved<ConePoint> k = project_K(model, q, cfg);
  return {q - k.value, k.stats};
}

/// Orthogonal projection of X onto range(A).
inline BlockSymMatrix project_subspace_rangeA(const ConeModel& model, const BlockSymMatrix& x) {
  detail::require(x.n() == model.n, "project_subspace_rangeA: matrix/model n mismatch");
  const Eigen::VectorXd c = model.gram_factor.solve(lmi_adjoint(model, x).coords());
  return lmi_apply(model, ConePoint(model.n, c));
}

/// Pi_{T_n}(X) by Dykstra's alternating projections between the PSD cone and
/// range(A). Only the PSD step carries a correction term.
inline Solved<BlockSymMatrix> project_slice_dykstra(const ConeModel& model,
                                                    const BlockSymMatrix& x,
                                                    const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require(x.n() == model.n, "project_slice_dykstra: matrix/model n mismatch");
  detail::require(x.finite(), "project_slice_dykstra: non-finite input");
  Eigen::VectorXd cur = x.svec();
  if (cur.isZero(0.0)) return {BlockSymMatrix(model.n), {0, 0.0, true}};

  const double scale = std::max(1.0, cur.norm());
  const Eigen::MatrixXd& a = model.lmi;
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(cur.size());
  SolveStats stats;
  for (long iter = 1; iter <= cfg.max_iter; ++iter) {
    const Eigen::VectorXd shifted = cur + correction;
    const Eigen::VectorXd psd = detail::psd_project_svec(shifted);
    correction = shifted - psd;
    const Eigen::VectorXd next = a * model.gram_factor.solve(a.transpose() * psd);
    const double gap = (psd - next).norm();
    const double change = (next - cur).norm();
    cur = next;
    stats.iterations = iter;
    stats.final_residual = std::max(gap, change) / scale;
    if (stats.final_residual <= cfg.tol) {
      stats.converged = true;
      break;
    }
  }
  return {BlockSymMatrix::from_svec(model.n, cur), stats};
}

/// Pi_{T_n}(X) = A z(X), z the fixed point of
///   z -> Pi_K[z - gamma (A*A z - A* X)],
/// with inner projections solved at tol / 100.
inline Solved<BlockSymMatrix> project_slice_fixedpoint(const ConeModel& model,
                                                       const BlockSymMatrix& x,
                                                       const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require(x.n() == model.n, "project_slice_fixedpoint: matrix/model n mismatch");
  detail::require(x.finite(), "project_slice_fixedpoint: non-finite input");
  if (x.svec().isZero(0.0)) return {BlockSymMatrix(model.n), {0, 0.0, true}};

  const double gamma = cfg.gamma_frac ? *cfg.gamma_frac / model.gram_lambda_max : model.gamma;
  const double scale = std::max(1.0, x.frobenius_norm());
  SolverConfig inner = cfg;
  inner.tol = cfg.tol / 100.0;

  const Eigen::VectorXd rhs = lmi_adjoint(model, x).coords();
  const Eigen::MatrixXd gram = model.gram.dense();
  ConePoint z(model.n);
  SolveStats stats;
  for (long iter = 1; iter <= cfg.max_iter; ++iter) {
    const ConePoint step(model.n, z.coords() - gamma * (gram * z.coords() - rhs));
    const Solved<ConePoint> next = project_K(model, step, inner);
    stats.iterations = iter;
    if (!next.stats.converged) {
      stats.final_residual = std::numeric_limits<double>::infinity();
      return {lmi_apply(model, z), stats};
    }
    stats.final_residual = (next.value - z).norm() / scale;
    z = next.value;
    if (stats.final_residual <= cfg.tol) {
      stats.converged = true;
      break;
    }
  }
  return {lmi_apply(model, z), stats};
}

}  // namespace sliceproj
