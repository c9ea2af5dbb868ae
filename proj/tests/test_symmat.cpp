#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "sliceproj/sampling.hpp"
#include "sliceproj/symmat.hpp"

using namespace sliceproj;

namespace {

void expect_sym2_near(Sym2 got, Sym2 want, double tol) {
  EXPECT_NEAR(got.a, want.a, tol);
  EXPECT_NEAR(got.b, want.b, tol);
  EXPECT_NEAR(got.c, want.c, tol);
}

Eigen::Vector2d eigvals_dense(Sym2 m) {
  Eigen::Matrix2d d;
  d << m.a, m.b, m.b, m.c;
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(d).eigenvalues();
}

}  // namespace

TEST(Eig2, DiagonalInputKeepsOrderAndZeroAngle) {
  const Spectral2 s = eig2({2.0, 0.0, 1.0});
  EXPECT_EQ(s.eig1, 2.0);
  EXPECT_EQ(s.eig2, 1.0);
  EXPECT_EQ(s.angle, 0.0);
}

TEST(Eig2, SwapMatrixHasPlusMinusOne) {
  const Spectral2 s = eig2({0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(s.eig1, 1.0);
  EXPECT_DOUBLE_EQ(s.eig2, -1.0);
  expect_sym2_near(s.reconstruct(), {0.0, 1.0, 0.0}, 1e-15);
}

TEST(Eig2, IsotropicInputAnyAngleReconstructs) {
  for (const double a : {-3.5, 0.0, 7.25}) {
    const Spectral2 s = eig2({a, 0.0, a});
    EXPECT_EQ(s.eig1, a);
    EXPECT_EQ(s.eig2, a);
    expect_sym2_near(s.reconstruct(), {a, 0.0, a}, 1e-15);
  }
}

TEST(Eig2, AngleRangeAndOrdering) {
  Rng rng(11);
  for (int k = 0; k < 2000; ++k) {
    const Sym2 m = random_sym2(rng);
    const Spectral2 s = eig2(m);
    EXPECT_GE(s.eig1, s.eig2);
    EXPECT_GT(s.angle, -std::numbers::pi / 2);
    EXPECT_LE(s.angle, std::numbers::pi / 2);
  }
}

TEST(Eig2, RejectsNonFinite) {
  EXPECT_THROW(eig2({std::nan(""), 0.0, 1.0}), InvalidInput);
  EXPECT_THROW(eig2({1.0, std::numeric_limits<double>::infinity(), 1.0}), InvalidInput);
}

TEST(Eig2, MatchesDenseSolverIncludingNearDegenerate) {
  Rng rng(12);
  for (int k = 0; k < 2000; ++k) {
    Sym2 m = random_sym2(rng);
    if (k % 4 == 1) m = {1.0 + 1e-9 * m.a, 1e-9 * m.b, 1.0};  // nearly repeated
    if (k % 4 == 2) m = {m.a, 1e-12 * m.b, m.a + 1e-13};
    if (k % 4 == 3) m = std::pow(10.0, uniform(rng, -8, 8)) * m;
    const Spectral2 s = eig2(m);
    const Eigen::Vector2d want = eigvals_dense(m);
    const double scale = norm(m);
    EXPECT_NEAR(s.eig1, want[1], 1e-14 * scale + 1e-300);
    EXPECT_NEAR(s.eig2, want[0], 1e-14 * scale + 1e-300);
    EXPECT_LE(norm(s.reconstruct() - m), 1e-12 * scale);
  }
}

TEST(Eig2, SmallEigenvalueKeepsRelativeAccuracy) {
  // Eigenvalues 1 +- b; 1 - b is exact in binary64 (Sterbenz) and ~1e-10.
  const Sym2 m{1.0, 1.0 - 1e-10, 1.0};
  const double want = 1.0 - m.b;
  const Spectral2 s = eig2(m);
  EXPECT_NEAR(s.eig2, want, 4e-16 * want);
}

TEST(PsdProject2, ClipsDiagonal) {
  EXPECT_EQ(psd_project_2({2.0, 0.0, -1.0}), (Sym2{2.0, 0.0, 0.0}));
}

TEST(PsdProject2, KeepsPositiveEigenspaceOfSwap) {
  expect_sym2_near(psd_project_2({0.0, 1.0, 0.0}), {0.5, 0.5, 0.5}, 1e-15);
}

TEST(PsdProject2, FixesPsdInput) {
  Rng rng(13);
  for (int k = 0; k < 500; ++k) {
    const Sym2 g = random_sym2(rng);
    const Sym2 psd{g.a * g.a + g.b * g.b, g.b * (g.a + g.c), g.b * g.b + g.c * g.c};  // G^2
    EXPECT_EQ(psd_project_2(psd), psd);
  }
}

TEST(PsdProject2, OutputIsPsdAndMatchesSpectralClip) {
  Rng rng(14);
  for (int k = 0; k < 2000; ++k) {
    const Sym2 m = random_sym2(rng);
    const Sym2 p = psd_project_2(m);
    const Spectral2 s = eig2(p);
    EXPECT_GE(s.eig2, -1e-14 * norm(m));
    Spectral2 clip = eig2(m);
    clip.eig1 = std::max(clip.eig1, 0.0);
    clip.eig2 = std::max(clip.eig2, 0.0);
    EXPECT_LE(norm(clip.reconstruct() - p), 1e-14 * std::max(1.0, norm(m)));
  }
}

TEST(PsdProject2, Properties) {
  Rng rng(15);
  for (int k = 0; k < 2000; ++k) {
    const Sym2 m1 = std::exp(gaussian(rng)) * random_sym2(rng);
    const Sym2 m2 = random_sym2(rng);
    const Sym2 p1 = psd_project_2(m1);
    expect_sym2_near(psd_project_2(p1), p1, 1e-12 * std::max(1.0, norm(p1)));
    EXPECT_LE(norm(p1 - psd_project_2(m2)), norm(m1 - m2) + 1e-12);
    // Moreau in S^2: m = P(m) - P(-m), and the parts are orthogonal.
    const Sym2 minus = psd_project_2(-1.0 * m1);
    EXPECT_LE(norm(p1 - minus - m1), 1e-14 * norm(m1));
    EXPECT_LE(std::abs(inner(p1, minus)), 1e-14 * inner(m1, m1));
  }
}

TEST(PsdProject2Jacobian, MatchesFiniteDifferencesAwayFromKinks) {
  Rng rng(16);
  const double r2 = std::numbers::sqrt2;
  int checked = 0;
  while (checked < 300) {
    const Sym2 m = random_sym2(rng);
    const Spectral2 s = eig2(m);
    if (std::min(std::abs(s.eig1), std::abs(s.eig2)) < 0.05) continue;
    ++checked;
    const Eigen::Matrix3d jac = psd_project_2_jacobian(m);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Sym2 dir{};
      if (k == 0) dir.a = 1.0;
      if (k == 1) dir.b = 1.0 / r2;
      if (k == 2) dir.c = 1.0;
      const Sym2 fwd = psd_project_2(m + h * dir);
      const Sym2 bwd = psd_project_2(m - (h * dir));
      const Sym2 diff = (0.5 / h) * (fwd - bwd);
      EXPECT_NEAR(jac(0, k), diff.a, 1e-6);
      EXPECT_NEAR(jac(1, k), r2 * diff.b, 1e-6);
      EXPECT_NEAR(jac(2, k), diff.c, 1e-6);
    }
  }
}

TEST(SymMatrix, PackedLayoutIsLowerTriangleRowMajor) {
  const SymMatrix m(3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.at(0, 0), 1);
  EXPECT_EQ(m.at(1, 0), 2);
  EXPECT_EQ(m.at(0, 1), 2);
  EXPECT_EQ(m.at(1, 1), 3);
  EXPECT_EQ(m.at(2, 0), 4);
  EXPECT_EQ(m.at(2, 1), 5);
  EXPECT_EQ(m.at(2, 2), 6);
  EXPECT_EQ(SymMatrix::from_dense(m.dense()), m);
  EXPECT_THROW(SymMatrix(3, {1, 2, 3}), InvalidInput);
}

TEST(BlockSymMatrix, AssembleAndSvecPreserveInnerProduct) {
  Rng rng(17);
  for (int n = 2; n <= 6; ++n) {
    const BlockSymMatrix x = random_block_matrix(rng, n);
    const BlockSymMatrix y = random_block_matrix(rng, n);
    EXPECT_EQ(x.size(), static_cast<std::size_t>(2 * n - 1));
    const Eigen::MatrixXd dx = x.assemble().dense();
    const Eigen::MatrixXd dy = y.assemble().dense();
    ASSERT_EQ(dx.rows(), 4 * n - 2);
    EXPECT_NEAR(inner(x, y), (dx.array() * dy.array()).sum(), 1e-13);
    EXPECT_NEAR(x.svec().dot(y.svec()), inner(x, y), 1e-13);
    EXPECT_EQ(BlockSymMatrix::from_svec(n, x.svec()).svec(), x.svec());
    // Off-block entries are zero.
    EXPECT_EQ(dx(0, 2), 0.0);
    EXPECT_EQ(dx(3, 0), 0.0);
  }
}

TEST(PsdProjectBlock, PsdBlocksUnchangedNegativeBlocksZeroed) {
  BlockSymMatrix psd(3);
  BlockSymMatrix neg(3);
  for (std::size_t i = 0; i < psd.size(); ++i) {
    psd[i] = {1.0 + static_cast<double>(i), 0.5, 2.0};
    neg[i] = {-1.0, 0.0, -1.0};
  }
  EXPECT_EQ(psd_project_block(psd), psd);
  EXPECT_EQ(psd_project_block(neg), BlockSymMatrix(3));
}

TEST(PsdProjectBlock, MixedBlocksMatchFullJacobiProjection) {
  Rng rng(18);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 5;
    const BlockSymMatrix m = random_block_matrix(rng, n);
    const Eigen::MatrixXd blockwise = psd_project_block(m).assemble().dense();
    const Eigen::MatrixXd full = psd_project_full(m.assemble()).dense();
    EXPECT_LE((blockwise - full).norm(), 1e-10 * std::max(1.0, m.frobenius_norm()));
  }
}

TEST(JacobiEig, IdentityOfDimensionFive) {
  SymMatrix id(5);
  for (int i = 0; i < 5; ++i) id.at(i, i) = 1.0;
  const SymEigen e = jacobi_eig(id);
  for (const double v : e.values) EXPECT_EQ(v, 1.0);
  EXPECT_TRUE(e.vectors.isIdentity(0.0));
}

TEST(JacobiEig, DiagonalGivesPermutationBasis) {
  SymMatrix d(3);
  d.at(0, 0) = 1.0;
  d.at(1, 1) = -2.0;
  d.at(2, 2) = 3.0;
  const SymEigen e = jacobi_eig(d);
  EXPECT_EQ(e.values, (std::vector<double>{3.0, 1.0, -2.0}));
  Eigen::Matrix3d perm;
  perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  EXPECT_TRUE(e.vectors.isApprox(perm, 0.0));
}

TEST(JacobiEig, TiesKeepOriginalIndexOrder) {
  SymMatrix d(3);
  d.at(0, 0) = 1.0;
  d.at(1, 1) = 1.0;
  d.at(2, 2) = 2.0;
  const SymEigen e = jacobi_eig(d);
  EXPECT_EQ(e.vectors(2, 0), 1.0);
  EXPECT_EQ(e.vectors(0, 1), 1.0);
  EXPECT_EQ(e.vectors(1, 2), 1.0);
}

TEST(JacobiEig, RandomReconstructionOrthonormalityAndSorting) {
  Rng rng(19);
  for (const int d : {1, 2, 8, 8, 8, 22, 40}) {
    const SymMatrix m = random_sym_matrix(rng, d);
    const SymEigen e = jacobi_eig(m);
    const Eigen::Map<const Eigen::VectorXd> lam(e.values.data(), d);
    const Eigen::MatrixXd back = e.vectors * lam.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((back - m.dense()).norm(), 1e-11 * m.frobenius_norm()) << "d=" << d;
    EXPECT_LE((e.vectors * e.vectors.transpose() - Eigen::MatrixXd::Identity(d, d)).norm(), 1e-12);
    EXPECT_TRUE(std::is_sorted(e.values.rbegin(), e.values.rend()));
    // Independent oracle: Eigen's symmetric solver.
    const Eigen::VectorXd want = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.dense())
                                     .eigenvalues()
                                     .reverse();
    EXPECT_LE((lam - want).norm(), 1e-12 * m.frobenius_norm());
  }
}

TEST(JacobiEig, RejectsOversizeAndNonFinite) {
  EXPECT_THROW(jacobi_eig(SymMatrix(201)), InvalidInput);
  SymMatrix bad(2);
  bad.at(1, 0) = std::nan("");
  EXPECT_THROW(jacobi_eig(bad), InvalidInput);
}

TEST(JacobiEig, SweepBudgetExhaustionIsNumericFailure) {
  Rng rng(20);
  EXPECT_THROW(jacobi_eig(random_sym_matrix(rng, 30), 1), NumericFailure);
}
