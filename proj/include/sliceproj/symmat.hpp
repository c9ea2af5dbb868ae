#pragma once

// Dense symmetric kernels: closed-form 2x2 spectral decomposition, blockwise
// PSD projection, and a cyclic Jacobi eigensolver for full matrices.
//
// Block vectors use the "svec" layout (a, sqrt(2) b, c) per 2x2 block, so
// the Euclidean inner product of svec vectors equals the Frobenius inner
// product of the matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sliceproj/error.hpp"

namespace sliceproj {

/// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  friend Sym2 operator+(Sym2 l, Sym2 r) { return {l.a + r.a, l.b + r.b, l.c + r.c}; }
  friend Sym2 operator-(Sym2 l, Sym2 r) { return {l.a - r.a, l.b - r.b, l.c - r.c}; }
  friend Sym2 operator*(double s, Sym2 m) { return {s * m.a, s * m.b, s * m.c}; }
  friend bool operator==(const Sym2&, const Sym2&) = default;

  [[nodiscard]] bool finite() const {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
  }
};

inline double inner(Sym2 l, Sym2 r) { return l.a * r.a + 2.0 * l.b * r.b + l.c * r.c; }
inline double norm(Sym2 m) { return std::sqrt(inner(m, m)); }

/// Eigen-pair of a Sym2: eig1 >= eig2, eigenvector of eig1 is (cos angle, sin angle).
struct Spectral2 {
  double eig1 = 0.0;
  double eig2 = 0.0;
  double angle = 0.0;  // in (-pi/2, pi/2]

  [[nodiscard]] Sym2 reconstruct() const {
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    return {eig1 * cs * cs + eig2 * sn * sn, (eig1 - eig2) * cs * sn,
            eig1 * sn * sn + eig2 * cs * cs};
  }
};

namespace detail {

// Kahan's fma-compensated a*c - b*b.
inline double det2(double a, double b, double c) {
  const double w = b * b;
  const double e = std::fma(-b, b, w);
  const double f = std::fma(a, c, -w);
  return f + e;
}

}  // namespace detail

inline Spectral2 eig2(Sym2 m) {
  detail::require(m.finite(), "eig2: non-finite entry");
  const double half_trace = 0.5 * (m.a + m.c);
  const double half_diff = 0.5 * (m.a - m.c);
  const double radius = std::hypot(half_diff, m.b);

  // Larger-magnitude root first, the other from the determinant.
  double big = half_trace >= 0.0 ? half_trace + radius : half_trace - radius;
  double small = big != 0.0 ? detail::det2(m.a, m.b, m.c) / big : 0.0;
  Spectral2 s;
  s.eig1 = std::max(big, small);
  s.eig2 = std::min(big, small);
  if (radius == 0.0) {
    s.eig1 = s.eig2 = half_trace;
  }
  s.angle = 0.5 * std::atan2(2.0 * m.b, m.a - m.c);
  if (s.angle <= -0.5 * std::numbers::pi) s.angle += std::numbers::pi;
  return s;
}

/// Nearest PSD matrix in Frobenius norm.
inline Sym2 psd_project_2(Sym2 m) {
  const Spectral2 s = eig2(m);
  if (s.eig2 >= 0.0) return m;
  if (s.eig1 <= 0.0) return {};
  // eig1 * u u^T with u the top eigenvector, written via the half-difference
  // so that the small diagonal entry keeps full relative accuracy.
  const double d = 0.5 * (m.a - m.c);
  const double r = std::hypot(d, m.b);
  double p11, p22;  // (1 + d/r), (1 - d/r)
  if (d >= 0.0) {
    p11 = 1.0 + d / r;
    p22 = m.b * m.b / (r * (r + d));
  } else {
    p11 = m.b * m.b / (r * (r - d));
    p22 = 1.0 - d / r;
  }
  const double h = 0.5 * s.eig1;
  return {h * p11, h * m.b / r, h * p22};
}

/// An element of the (Clarke) Jacobian of psd_project_2 at m, in svec
/// coordinates (a, sqrt(2) b, c). Row-major 3x3.
inline Eigen::Matrix3d psd_project_2_jacobian(Sym2 m) {
  const Spectral2 s = eig2(m);
  if (s.eig2 > 0.0) return Eigen::Matrix3d::Identity();
  if (s.eig1 <= 0.0) return Eigen::Matrix3d::Zero();

  const double cs = std::cos(s.angle);
  const double sn = std::sin(s.angle);
  Eigen::Matrix2d q;
  q << cs, -sn, sn, cs;
  const double pos1 = std::max(s.eig1, 0.0);
  const double pos2 = std::max(s.eig2, 0.0);
  Eigen::Matrix2d omega;
  const double gap = s.eig1 - s.eig2;
  const double off = gap > 0.0 ? (pos1 - pos2) / gap : (s.eig1 > 0.0 ? 1.0 : 0.0);
  omega << (s.eig1 > 0.0 ? 1.0 : 0.0), off, off, (s.eig2 > 0.0 ? 1.0 : 0.0);

  const double r2 = std::numbers::sqrt2;
  Eigen::Matrix3d jac;
  for (int k = 0; k < 3; ++k) {
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    if (k == 0) h(0, 0) = 1.0;
    if (k == 1) h(0, 1) = h(1, 0) = 1.0 / r2;
    if (k == 2) h(1, 1) = 1.0;
    const Eigen::Matrix2d rotated = q.transpose() * h * q;
    const Eigen::Matrix2d image = q * omega.cwiseProduct(rotated) * q.transpose();
    jac(0, k) = image(0, 0);
    jac(1, k) = r2 * image(0, 1);
    jac(2, k) = image(1, 1);
  }
  return jac;
}

/// General d x d symmetric matrix, packed lower triangle, row-major:
/// (0,0), (1,0), (1,1), (2,0), ...
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), packed_(packed_size(dim), 0.0) {
    detail::require(dim > 0, "SymMatrix: dimension must be positive");
  }
  SymMatrix(int dim, std::vector<double> packed) : dim_(dim), packed_(std::move(packed)) {
    detail::require(dim > 0, "SymMatrix: dimension must be positive");
    detail::require(packed_.size() == packed_size(dim),
                    "SymMatrix: expected " + std::to_string(packed_size(dim)) + " entries");
  }

  static std::size_t packed_size(int dim) {
    return static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim + 1) / 2;
  }

  static SymMatrix from_dense(const Eigen::MatrixXd& m) {
    detail::require(m.rows() == m.cols() && m.rows() > 0, "SymMatrix: matrix must be square");
    SymMatrix s(static_cast<int>(m.rows()));
    for (int i = 0; i < s.dim_; ++i)
      for (int j = 0; j <= i; ++j) s.at(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::span<const double> packed() const { return packed_; }

  double& at(int i, int j) {
    if (i < j) std::swap(i, j);
    return packed_[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
  [[nodiscard]] double at(int i, int j) const {
    if (i < j) std::swap(i, j);
    return packed_[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }

  [[nodiscard]] Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = at(i, j);
    return m;
  }

  [[nodiscard]] double frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j <= i; ++j) s += (i == j ? 1.0 : 2.0) * at(i, j) * at(i, j);
    return std::sqrt(s);
  }

  [[nodiscard]] bool finite() const {
    return std::all_of(packed_.begin(), packed_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  int dim_ = 0;
  std::vector<double> packed_;
};

/// Block-diagonal element of S^{4n-2}: 2n-1 symmetric 2x2 blocks ordered
/// (M_0, y-blocks ascending, z-blocks ascending).
class BlockSymMatrix {
 public:
  BlockSymMatrix() = default;
  explicit BlockSymMatrix(int n) : n_(n), blocks_(block_count(n)) {
    detail::require(n >= 2, "BlockSymMatrix: n must be >= 2");
  }
  BlockSymMatrix(int n, std::vector<Sym2> blocks) : n_(n), blocks_(std::move(blocks)) {
    detail::require(n >= 2, "BlockSymMatrix: n must be >= 2");
    detail::require(blocks_.size() == block_count(n),
                    "BlockSymMatrix: expected " + std::to_string(block_count(n)) + " blocks");
  }

  static std::size_t block_count(int n) { return static_cast<std::size_t>(2 * n - 1); }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int dim() const { return 4 * n_ - 2; }
  [[nodiscard]] std::size_t size() const { return blocks_.size(); }
  [[nodiscard]] std::span<const Sym2> blocks() const { return blocks_; }
  Sym2& operator[](std::size_t i) { return blocks_[i]; }
  const Sym2& operator[](std::size_t i) const { return blocks_[i]; }

  [[nodiscard]] Eigen::VectorXd svec() const {
    Eigen::VectorXd v(3 * blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      v[3 * i] = blocks_[i].a;
      v[3 * i + 1] = std::numbers::sqrt2 * blocks_[i].b;
      v[3 * i + 2] = blocks_[i].c;
    }
    return v;
  }

  static BlockSymMatrix from_svec(int n, const Eigen::VectorXd& v) {
    BlockSymMatrix m(n);
    detail::require(static_cast<std::size_t>(v.size()) == 3 * m.size(),
                    "BlockSymMatrix: svec length mismatch");
    for (std::size_t i = 0; i < m.size(); ++i)
      m.blocks_[i] = {v[3 * i], v[3 * i + 1] / std::numbers::sqrt2, v[3 * i + 2]};
    return m;
  }

  /// The full (4n-2) x (4n-2) block-diagonal matrix.
  [[nodiscard]] SymMatrix assemble() const {
    SymMatrix s(dim());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const int o = static_cast<int>(2 * i);
      s.at(o, o) = blocks_[i].a;
      s.at(o + 1, o) = blocks_[i].b;
      s.at(o + 1, o + 1) = blocks_[i].c;
    }
    return s;
  }

  [[nodiscard]] double frobenius_norm() const {
    double s = 0.0;
    for (const auto& b : blocks_) s += inner(b, b);
    return std::sqrt(s);
  }

  [[nodiscard]] bool finite() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](Sym2 b) { return b.finite(); });
  }

  friend BlockSymMatrix operator+(BlockSymMatrix l, const BlockSymMatrix& r) {
    detail::require(l.n_ == r.n_, "BlockSymMatrix: n mismatch");
    for (std::size_t i = 0; i < l.size(); ++i) l.blocks_[i] = l.blocks_[i] + r.blocks_[i];
    return l;
  }
  friend BlockSymMatrix operator-(BlockSymMatrix l, const BlockSymMatrix& r) {
    detail::require(l.n_ == r.n_, "BlockSymMatrix: n mismatch");
    for (std::size_t i = 0; i < l.size(); ++i) l.blocks_[i] = l.blocks_[i] - r.blocks_[i];
    return l;
  }
  friend BlockSymMatrix operator*(double s, BlockSymMatrix m) {
    for (auto& b : m.blocks_) b = s * b;
    return m;
  }
  friend bool operator==(const BlockSymMatrix&, const BlockSymMatrix&) = default;

 private:
  int n_ = 0;
  std::vector<Sym2> blocks_;
};

inline double inner(const BlockSymMatrix& l, const BlockSymMatrix& r) {
  detail::require(l.n() == r.n(), "inner: n mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) s += inner(l[i], r[i]);
  return s;
}

inline BlockSymMatrix psd_project_block(const BlockSymMatrix& m) {
  BlockSymMatrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = psd_project_2(m[i]);
  return out;
}

/// Smallest eigenvalue over all blocks.
inline double min_block_eigenvalue(const BlockSymMatrix& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : m.blocks()) lo = std::min(lo, eig2(b).eig2);
  return lo;
}

struct SymEigen {
  std::vector<double> values;  // descending
  Eigen::MatrixXd vectors;     // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic-by-row Jacobi eigensolver.
inline SymEigen jacobi_eig(const SymMatrix& m, int max_sweeps = 50) {
  detail::require(m.dim() <= 200, "jacobi_eig: dimension exceeds 200");
  detail::require(m.finite(), "jacobi_eig: non-finite entry");
  const int d = m.dim();
  Eigen::MatrixXd a = m.dense();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
  const double scale = m.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  double off = off_norm();
  const double target = 1e-15 * scale;
  while (off > target) {
    if (sweep == max_sweeps) {
      if (off <= 1e-12 * scale) break;
      throw NumericFailure("jacobi_eig: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps");
    }
    // Early sweeps skip rotations that are small against the current off-norm.
    const double threshold = sweep < 3 ? 0.2 * off / (static_cast<double>(d) * d) : 0.0;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0 || std::abs(apq) < threshold) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = off_norm();
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  SymEigen out;
  out.sweeps = sweep;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (int k = 0; k < d; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Full-matrix PSD projection through jacobi_eig.
inline SymMatrix psd_project_full(const SymMatrix& m) {
  const SymEigen e = jacobi_eig(m);
  Eigen::VectorXd clipped(m.dim());
  for (int k = 0; k < m.dim(); ++k) clipped[k] = std::max(e.values[k], 0.0);
  return SymMatrix::from_dense(e.vectors * clipped.asDiagonal() * e.vectors.transpose());
}

}  // namespace sliceproj
