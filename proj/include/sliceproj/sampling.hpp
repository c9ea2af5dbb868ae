#pragma once

// Random generators for property checks. All draws go through a caller-owned
// std::mt19937_64 so sequences are reproducible from a seed.

#include <cmath>
#include <random>

#include "sliceproj/cones.hpp"
#include "sliceproj/symmat.hpp"

namespace sliceproj {

using Rng = std::mt19937_64;

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Sym2 random_sym2(Rng& rng) { return {gaussian(rng), gaussian(rng), gaussian(rng)}; }

inline ConePoint random_point(Rng& rng, int n) {
  ConePoint p(n);
  for (int k = 0; k < p.size(); ++k) p.coords()[k] = gaussian(rng);
  return p;
}

inline BlockSymMatrix random_block_matrix(Rng& rng, int n) {
  BlockSymMatrix m(n);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = random_sym2(rng);
  return m;
}

inline SymMatrix random_sym_matrix(Rng& rng, int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) = gaussian(rng);
  return m;
}

/// A point of K_n built by walking the chain inequalities from x3 = 1, then
/// rescaled. A fraction of draws lands on the boundary.
inline ConePoint random_cone_member(Rng& rng, int n) {
  ConePoint p(n);
  p.x3() = 1.0;
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double radius = std::sqrt(uniform(rng, 0.0, 1.0));
  const double y1 = radius * std::cos(angle);
  const double z1 = radius * std::sin(angle);
  // The chain needs y1, z1 >= 0 unless the next link is zero.
  p.y(1) = std::abs(y1);
  p.z(1) = std::abs(z1);
  auto link = [&](double prev) {
    const double u = uniform(rng, -1.2, 1.2);
    return std::clamp(u, -1.0, 1.0) * std::sqrt(prev);
  };
  for (int i = 1; i <= n - 2; ++i) {
    p.y(i + 1) = std::abs(link(p.y(i)));
    p.z(i + 1) = std::abs(link(p.z(i)));
  }
  p.x1() = link(p.y(n - 1));
  p.x2() = link(p.z(n - 1));
  return std::exp(gaussian(rng)) * p;
}

}  // namespace sliceproj
