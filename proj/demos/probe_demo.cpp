// Fits the residual exponent for n = 2..6 and projects one point onto K_3.

#include <cstdio>

#include "sliceproj/sliceproj.hpp"

int main() {
  using namespace sliceproj;
  std::puts(" n   lambda_n   fitted slope   implied order");
  for (int n = 2; n <= 6; ++n) {
    const ProbeReport r = probe_semismoothness(make_cone(n), ProbeMode::exact, GridSpec{});
    std::printf("%2d   %.6f   %.6f       %.6f\n", n, r.target_lambda, r.fitted_slope,
                r.implied_order);
  }

  const ConeModel k3 = make_cone(3);
  ConePoint q(3);
  q.x1() = 1.0;
  q.x2() = -0.5;
  q.x3() = 0.25;
  const Solved<ConePoint> p = project_K(k3, q, {});
  std::printf("\nPi_K(q) for q = (1, -0.5, 0.25, 0, 0, 0, 0):\n ");
  for (double c : p.value.coords()) std::printf(" %.6f", c);
  std::printf("\n  iterations=%ld residual=%.2e in K: %s\n", p.stats.iterations,
              p.stats.final_residual, membership_K(k3, p.value, 1e-8).member ? "yes" : "no");
}
