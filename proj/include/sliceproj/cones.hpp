#pragma once

// The cone family K_n in R^{2n+1}:
//
//   x3^2 >= y1^2 + z1^2,  x3 >= 0,
//   x3 y_i >= y_{i+1}^2 (i < n-1),  x3 y_{n-1} >= x1^2,
//   x3 z_i >= z_{i+1}^2 (i < n-1),  x3 z_{n-1} >= x2^2,
//
// its LMI form p -> M_0(p) (+) M^y_i(p) (+) M^z_i(p) in S^{4n-2}, the curves
// v(t) on the boundary of the polar cone and their normal generators w(t).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sliceproj/error.hpp"
#include "sliceproj/symmat.hpp"

namespace sliceproj {

inline constexpr int kMinConeIndex = 2;
inline constexpr int kMaxConeIndex = 12;

/// Point (x1, x2, x3, y_1..y_{n-1}, z_1..z_{n-1}) in R^{2n+1}.
class ConePoint {
 public:
  ConePoint() = default;
  explicit ConePoint(int n) : n_(n), coords_(Eigen::VectorXd::Zero(2 * n + 1)) {
    detail::require(n >= kMinConeIndex, "ConePoint: n must be >= 2");
  }
  ConePoint(int n, Eigen::VectorXd coords) : n_(n), coords_(std::move(coords)) {
    detail::require(n >= kMinConeIndex, "ConePoint: n must be >= 2");
    detail::require(coords_.size() == 2 * n + 1,
                    "ConePoint: expected " + std::to_string(2 * n + 1) + " coordinates");
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int size() const { return static_cast<int>(coords_.size()); }
  [[nodiscard]] const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::VectorXd& coords() { return coords_; }

  // 1-based chain indices, matching the cone's definition.
  [[nodiscard]] int y_index(int i) const { return 3 + i - 1; }
  [[nodiscard]] int z_index(int i) const { return 3 + (n_ - 1) + i - 1; }

  [[nodiscard]] double x1() const { return coords_[0]; }
  [[nodiscard]] double x2() const { return coords_[1]; }
  [[nodiscard]] double x3() const { return coords_[2]; }
  [[nodiscard]] double y(int i) const { return coords_[y_index(i)]; }
  [[nodiscard]] double z(int i) const { return coords_[z_index(i)]; }
  double& x1() { return coords_[0]; }
  double& x2() { return coords_[1]; }
  double& x3() { return coords_[2]; }
  double& y(int i) { return coords_[y_index(i)]; }
  double& z(int i) { return coords_[z_index(i)]; }

  [[nodiscard]] double norm() const { return coords_.norm(); }
  [[nodiscard]] bool finite() const { return coords_.allFinite(); }

  friend ConePoint operator+(const ConePoint& l, const ConePoint& r) {
    detail::require(l.n_ == r.n_, "ConePoint: n mismatch");
    return {l.n_, l.coords_ + r.coords_};
  }
  friend ConePoint operator-(const ConePoint& l, const ConePoint& r) {
    detail::require(l.n_ == r.n_, "ConePoint: n mismatch");
    return {l.n_, l.coords_ - r.coords_};
  }
  friend ConePoint operator*(double s, const ConePoint& p) { return {p.n_, s * p.coords_}; }
  friend bool operator==(const ConePoint& l, const ConePoint& r) {
    return l.n_ == r.n_ && l.coords_ == r.coords_;
  }

 private:
  int n_ = 0;
  Eigen::VectorXd coords_;
};

inline double dot(const ConePoint& l, const ConePoint& r) {
  detail::require(l.n() == r.n(), "dot: n mismatch");
  return l.coords().dot(r.coords());
}

/// Everything precomputed for a fixed cone index n. Immutable after make_cone.
struct ConeModel {
  int n = 0;
  double kappa = 0.0;   // 2^n
  double lambda = 0.0;  // 2^n / (2^n - 1), the conjugate exponent of kappa
  SymMatrix gram;       // A*A on R^{2n+1}
  Eigen::LLT<Eigen::MatrixXd> gram_factor;
  double gram_lambda_min = 0.0;
  double gram_lambda_max = 0.0;
  double gamma = 0.0;         // 0.9 / gram_lambda_max
  Eigen::MatrixXd lmi;        // A in svec coordinates, (6n-3) x (2n+1)
  Eigen::LLT<Eigen::MatrixXd> admm_factor;  // I + A*A, the ADMM p-update at rho = 1

  [[nodiscard]] int dim() const { return 2 * n + 1; }
  [[nodiscard]] int block_count() const { return 2 * n - 1; }
  [[nodiscard]] int svec_dim() const { return 3 * block_count(); }
};

inline BlockSymMatrix lmi_apply(const ConeModel& model, const ConePoint& p) {
  detail::require(p.n() == model.n, "lmi_apply: point/model n mismatch");
  const int n = model.n;
  std::vector<Sym2> blocks;
  blocks.reserve(BlockSymMatrix::block_count(n));
  blocks.push_back({p.x3() + p.y(1), p.z(1), p.x3() - p.y(1)});
  for (int i = 1; i <= n - 2; ++i) blocks.push_back({p.x3(), p.y(i + 1), p.y(i)});
  blocks.push_back({p.x3(), p.x1(), p.y(n - 1)});
  for (int i = 1; i <= n - 2; ++i) blocks.push_back({p.x3(), p.z(i + 1), p.z(i)});
  blocks.push_back({p.x3(), p.x2(), p.z(n - 1)});
  return {n, std::move(blocks)};
}

/// Adjoint of lmi_apply under the Frobenius inner product.
inline ConePoint lmi_adjoint(const ConeModel& model, const BlockSymMatrix& m) {
  detail::require(m.n() == model.n, "lmi_adjoint: matrix/model n mismatch");
  const int n = model.n;
  ConePoint p(n);
  std::size_t k = 0;
  const Sym2 m0 = m[k++];
  p.x3() += m0.a + m0.c;
  p.y(1) += m0.a - m0.c;
  p.z(1) += 2.0 * m0.b;
  for (int i = 1; i <= n - 1; ++i) {
    const Sym2 b = m[k++];
    p.x3() += b.a;
    (i < n - 1 ? p.y(i + 1) : p.x1()) += 2.0 * b.b;
    p.y(i) += b.c;
  }
  for (int i = 1; i <= n - 1; ++i) {
    const Sym2 b = m[k++];
    p.x3() += b.a;
    (i < n - 1 ? p.z(i + 1) : p.x2()) += 2.0 * b.b;
    p.z(i) += b.c;
  }
  return p;
}

inline ConeModel make_cone(int n) {
  if (n < kMinConeIndex) throw InvalidInput("n must be >= 2");
  if (n > kMaxConeIndex) throw InvalidInput("n must be <= 12");
  ConeModel m;
  m.n = n;
  m.kappa = std::ldexp(1.0, n);
  m.lambda = m.kappa / (m.kappa - 1.0);

  const int d = m.dim();
  m.lmi.resize(m.svec_dim(), d);
  Eigen::MatrixXd gram(d, d);
  for (int k = 0; k < d; ++k) {
    ConePoint e(n);
    e.coords()[k] = 1.0;
    m.lmi.col(k) = lmi_apply(m, e).svec();
    gram.col(k) = lmi_adjoint(m, lmi_apply(m, e)).coords();
  }
  m.gram = SymMatrix::from_dense(gram);

  const SymEigen spectrum = jacobi_eig(m.gram);
  m.gram_lambda_max = spectrum.values.front();
  m.gram_lambda_min = spectrum.values.back();
  if (!(m.gram_lambda_min > 0.0)) throw NumericFailure("make_cone: LMI map is not injective");
  m.gram_factor.compute(gram);
  if (m.gram_factor.info() != Eigen::Success) throw NumericFailure("make_cone: gram factorization");
  m.gamma = 0.9 / m.gram_lambda_max;
  m.admm_factor.compute(Eigen::MatrixXd::Identity(d, d) + gram);
  return m;
}

struct Membership {
  bool member = false;
  double worst_violation = 0.0;  // 0 when every inequality holds exactly
  std::string worst_constraint;  // empty when nothing is violated
};

/// Checks the defining inequalities of K_n, each with additive slack tol.
inline Membership membership_K(const ConeModel& model, const ConePoint& p, double tol = 1e-9) {
  detail::require(p.n() == model.n, "membership_K: point/model n mismatch");
  const int n = model.n;
  Membership out;
  auto check = [&](double lhs, double rhs, const std::string& name) {
    const double violation = rhs - lhs;
    if (violation > out.worst_violation) {
      out.worst_violation = violation;
      out.worst_constraint = name;
    }
  };
  const double x3 = p.x3();
  check(x3 * x3, p.y(1) * p.y(1) + p.z(1) * p.z(1), "x3^2 >= y1^2 + z1^2");
  check(x3, 0.0, "x3 >= 0");
  for (int i = 1; i <= n - 2; ++i) {
    check(x3 * p.y(i), p.y(i + 1) * p.y(i + 1),
          "x3*y" + std::to_string(i) + " >= y" + std::to_string(i + 1) + "^2");
    check(x3 * p.z(i), p.z(i + 1) * p.z(i + 1),
          "x3*z" + std::to_string(i) + " >= z" + std::to_string(i + 1) + "^2");
  }
  check(x3 * p.y(n - 1), p.x1() * p.x1(), "x3*y" + std::to_string(n - 1) + " >= x1^2");
  check(x3 * p.z(n - 1), p.x2() * p.x2(), "x3*z" + std::to_string(n - 1) + " >= x2^2");
  out.member = p.finite() && out.worst_violation <= tol;
  return out;
}

/// LMI-side membership: smallest block eigenvalue of lmi_apply(p) >= -tol.
inline bool membership_K_lmi(const ConeModel& model, const ConePoint& p, double tol = 1e-9) {
  return min_block_eigenvalue(lmi_apply(model, p)) >= -tol;
}

/// |u3|^lambda - |u1|^lambda - |u2|^lambda; nonnegative on the polar link set.
inline double polar_S_slack(const ConeModel& model, std::array<double, 3> u) {
  const double l = model.lambda;
  return std::pow(std::abs(u[2]), l) - std::pow(std::abs(u[0]), l) - std::pow(std::abs(u[1]), l);
}

/// Membership in S_n° = {|u1|^l + |u2|^l <= |u3|^l, u3 <= 0}; tol is relative to |u3|^l.
inline bool membership_polar_S(std::array<double, 3> u, const ConeModel& model,
                               double tol = 1e-12) {
  if (!(std::isfinite(u[0]) && std::isfinite(u[1]) && std::isfinite(u[2]))) return false;
  const double scale = std::max(std::pow(std::abs(u[2]), model.lambda), 1e-300);
  return u[2] <= 0.0 && polar_S_slack(model, u) >= -tol * scale;
}

namespace detail {

inline void require_unit_interval(double t, const char* who) {
  require(std::isfinite(t) && t >= 0.0 && t <= 1.0, std::string(who) + ": t must lie in [0,1]");
}

// (1 - t^lambda)^e, via log1p.
inline double tail_power(const ConeModel& m, double t, double e) {
  return std::exp(e * std::log1p(-std::pow(t, m.lambda)));
}

// (1 - t^lambda)^e - 1, via log1p/expm1.
inline double tail_power_minus_one(const ConeModel& m, double t, double e) {
  return std::expm1(e * std::log1p(-std::pow(t, m.lambda)));
}

}  // namespace detail

/// v(t) = (t, (1 - t^l)^{1/l}, -1, 0, ..., 0), on the boundary of K_n°.
inline ConePoint curve_v(const ConeModel& model, double t) {
  detail::require_unit_interval(t, "curve_v");
  ConePoint v(model.n);
  v.x1() = t;
  v.x2() = detail::tail_power(model, t, 1.0 / model.lambda);
  v.x3() = -1.0;
  return v;
}

/// w(t) = (t^{l/k}, (1-t^l)^{1/k}, 1, t^{l/2^i}..., (1-t^l)^{1/2^i}...).
inline ConePoint curve_w(const ConeModel& model, double t) {
  detail::require_unit_interval(t, "curve_w");
  ConePoint w(model.n);
  w.x1() = std::pow(t, model.lambda / model.kappa);
  w.x2() = detail::tail_power(model, t, 1.0 / model.kappa);
  w.x3() = 1.0;
  for (int i = 1; i <= model.n - 1; ++i) {
    const double e = std::ldexp(1.0, -i);
    w.y(i) = std::pow(t, model.lambda * e);
    w.z(i) = detail::tail_power(model, t, e);
  }
  return w;
}

/// h(t) = v(t) - v(0), with the second coordinate evaluated without cancellation.
inline ConePoint curve_step(const ConeModel& model, double t) {
  detail::require_unit_interval(t, "curve_step");
  ConePoint h(model.n);
  h.x1() = t;
  h.x2() = detail::tail_power_minus_one(model, t, 1.0 / model.lambda);
  return h;
}

/// <v(t) - v(0), w(t)> = 1 - (1 - t^l)^{1/k}.
inline double curve_step_inner(const ConeModel& model, double t) {
  detail::require_unit_interval(t, "curve_step_inner");
  return -detail::tail_power_minus_one(model, t, 1.0 / model.kappa);
}

/// The normal cone of K_n° at base is the ray spanned by generator.
struct NormalRay {
  ConePoint base;
  ConePoint generator;
};

inline NormalRay normal_ray(const ConeModel& model, double t) {
  return {curve_v(model, t), curve_w(model, t)};
}

/// Projection onto the tangent cone {d : <d, w> <= 0} of K_n° at the ray's base.
inline ConePoint tangent_project(const NormalRay& ray, const ConePoint& d) {
  const double ww = dot(ray.generator, ray.generator);
  detail::require(ww > 0.0, "tangent_project: zero generator");
  const double dw = dot(d, ray.generator);
  if (dw <= 0.0) return d;
  return d - (dw / ww) * ray.generator;
}

/// (sum|x|^p)^{1/p} (sum|y|^q)^{1/q} - sum|x_i y_i|, q = p/(p-1).
inline double holder_gap(std::span<const double> x, std::span<const double> y, double p) {
  detail::require(p > 1.0 && std::isfinite(p), "holder_gap: p must exceed 1");
  detail::require(x.size() == y.size(), "holder_gap: length mismatch");
  const double q = p / (p - 1.0);
  double lhs = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lhs += std::abs(x[i] * y[i]);
    sx += std::pow(std::abs(x[i]), p);
    sy += std::pow(std::abs(y[i]), q);
  }
  return std::pow(sx, 1.0 / p) * std::pow(sy, 1.0 / q) - lhs;
}

}  // namespace sliceproj
