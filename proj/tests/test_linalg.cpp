#include <cmath>

#include <gtest/gtest.h>

#include "mtrl/errors.hpp"
#include "mtrl/linalg.hpp"
#include "test_util.hpp"

namespace mtrl::linalg {
namespace {

TEST(OrthonormalBasis, AcceptsOrthonormalColumns) {
  const OrthonormalBasis b(Matrix::Identity(4, 2));
  EXPECT_EQ(b.ambient_dim(), 4);
  EXPECT_EQ(b.rank(), 2);
  EXPECT_NEAR((b.columns().transpose() * b.columns() - Matrix::Identity(2, 2)).norm(), 0.0,
              kOrthonormalTol);
}

TEST(OrthonormalBasis, RejectsNonOrthonormalColumns) {
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  EXPECT_THROW(OrthonormalBasis{m}, InvariantError);
}

TEST(OrthonormalBasis, RejectsNonFiniteEntries) {
  Matrix m = Matrix::Identity(2, 1);
  m(1, 0) = NAN;
  EXPECT_THROW(OrthonormalBasis{m}, std::exception);
}

TEST(ReducedSvd, IdentityHasUnitSingularValues) {
  const ReducedSvd svd = reduced_svd(Matrix::Identity(3, 3), 2);
  ASSERT_EQ(svd.S.size(), 2);
  EXPECT_DOUBLE_EQ(svd.S(0), 1.0);
  EXPECT_DOUBLE_EQ(svd.S(1), 1.0);
}

TEST(ReducedSvd, DiagonalLeadingVectorIsFirstAxis) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  const ReducedSvd svd = reduced_svd(d, 1);
  EXPECT_NEAR(svd.S(0), 3.0, 1e-12);
  EXPECT_NEAR(std::abs(svd.U.columns()(0, 0)), 1.0, 1e-12);
}

TEST(ReducedSvd, FullRankRoundTrip) {
  Engine rng(1);
  const Matrix m = test::random_gaussian(5, 4, rng);
  const ReducedSvd svd = reduced_svd(m, 4);
  const Matrix rebuilt = svd.U.columns() * svd.S.asDiagonal() * svd.V.columns().transpose();
  EXPECT_LE((rebuilt - m).norm(), 1e-8);
  for (Index i = 1; i < svd.S.size(); ++i) EXPECT_GE(svd.S(i - 1), svd.S(i));
}

TEST(ReducedSvd, SignConventionMakesFirstNonzeroEntryPositive) {
  Engine rng(2);
  const Matrix m = test::random_gaussian(6, 3, rng);
  const ReducedSvd a = reduced_svd(m, 3);
  const ReducedSvd b = reduced_svd(-m, 3);
  for (Index j = 0; j < 3; ++j) {
    Index i = 0;
    while (std::abs(a.U.columns()(i, j)) <= 1e-12) ++i;
    EXPECT_GT(a.U.columns()(i, j), 0.0);
  }
  EXPECT_LE((a.U.columns() - b.U.columns()).norm(), 1e-10);
}

TEST(ReducedSvd, RejectsRankAboveMinDimension) {
  EXPECT_THROW(reduced_svd(Matrix::Identity(2, 3), 3), DimensionError);
}

TEST(PinvApply, IdentityReturnsInput) {
  const PinvSolution sol = pinv_apply(Matrix::Identity(2, 2), Vector::LinSpaced(2, 1, 2));
  EXPECT_DOUBLE_EQ(sol.x(0), 1.0);
  EXPECT_DOUBLE_EQ(sol.x(1), 2.0);
  EXPECT_FALSE(sol.rank_deficient);
}

TEST(PinvApply, SingleColumnOfOnesGivesMean) {
  Vector y(2);
  y << 1, 3;
  const PinvSolution sol = pinv_apply(Matrix::Ones(2, 1), y);
  EXPECT_NEAR(sol.x(0), 2.0, 1e-12);
}

TEST(PinvApply, RecoversNoiselessSolution) {
  Engine rng(3);
  const Matrix a = test::random_gaussian(50, 3, rng);
  const Vector x0 = test::random_gaussian(3, 1, rng);
  const PinvSolution sol = pinv_apply(a, a * x0);
  EXPECT_LE((sol.x - x0).norm(), 1e-8);
}

TEST(PinvApply, FlagsRankDeficiencyAndReturnsMinimumNorm) {
  Matrix a(3, 2);
  a << 1, 1, 1, 1, 1, 1;
  const PinvSolution sol = pinv_apply(a, Vector::Constant(3, 2.0));
  EXPECT_TRUE(sol.rank_deficient);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-10);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-10);
}

TEST(PinvApply, RejectsShapeMismatch) {
  EXPECT_THROW(pinv_apply(Matrix::Identity(2, 2), Vector::Zero(3)), DimensionError);
}

TEST(SubspaceDistance, IdenticalSubspacesAreZero) {
  const OrthonormalBasis e1(Matrix::Identity(2, 1));
  EXPECT_NEAR(subspace_distance(e1, e1), 0.0, 1e-15);
}

TEST(SubspaceDistance, OrthogonalSubspacesAreOne) {
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;
  EXPECT_NEAR(subspace_distance(OrthonormalBasis(Matrix::Identity(2, 1)), OrthonormalBasis(e2)),
              1.0, 1e-15);
}

TEST(SubspaceDistance, FortyFiveDegreesGivesInverseSqrtTwo) {
  Matrix diag(2, 1);
  diag << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(
      subspace_distance(OrthonormalBasis(Matrix::Identity(2, 1)), OrthonormalBasis(diag)),
      1.0 / std::sqrt(2.0), 1e-12);
}

TEST(SubspaceDistance, MatchesSineOfLargestPrincipalAngle) {
  Engine rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const OrthonormalBasis b1 = orthonormalize(test::random_gaussian(6, 2, rng));
    const OrthonormalBasis b2 = orthonormalize(test::random_gaussian(6, 2, rng));
    // Cosines of principal angles are the singular values of B1^T B2.
    const Vector cosines = singular_values(b1.columns().transpose() * b2.columns());
    const double smallest = std::min(1.0, cosines.minCoeff());
    EXPECT_NEAR(subspace_distance(b1, b2), std::sqrt(1.0 - smallest * smallest), 1e-9);
  }
}

TEST(ExtremeSingularValues, Diagonal) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 0.5;
  const SingularRange range = extreme_singular_values(m);
  EXPECT_NEAR(range.min, 0.5, 1e-12);
  EXPECT_NEAR(range.max, 2.0, 1e-12);
}

TEST(ExtremeSingularValues, UnitRankOneOuterProduct) {
  Vector u(3), v(3);
  u << 1, 2, 2;
  v << 0, 3, 4;
  const SingularRange range =
      extreme_singular_values((u / u.norm()) * (v / v.norm()).transpose());
  EXPECT_NEAR(range.min, 0.0, 1e-12);
  EXPECT_NEAR(range.max, 1.0, 1e-12);
}

TEST(ExtremeSingularValues, ConstructedFactorizationMatchesKnownSpectrum) {
  Engine rng(5);
  const int T = 7, d = 9, r = 3;
  const Matrix U = orthonormalize(test::random_gaussian(T, r, rng)).columns();
  const Matrix V = orthonormalize(test::random_gaussian(d, r, rng)).columns();
  Vector sigma(r);
  sigma << 4.0, 2.5, 0.75;
  const Matrix theta = U * sigma.asDiagonal() * V.transpose();
  const Vector s = singular_values(theta);
  EXPECT_NEAR(s(0), 4.0, 1e-8);
  EXPECT_NEAR(s(r - 1), 0.75, 1e-8);
}

TEST(SpectralNorm, EqualsLargestSingularValue) {
  Engine rng(6);
  const Matrix m = test::random_gaussian(4, 6, rng);
  EXPECT_NEAR(spectral_norm(m), singular_values(m)(0), 1e-10);
}

}  // namespace
}  // namespace mtrl::linalg
