#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"
#include "test_support.hpp"

namespace spectraprune {
namespace {

using testing::random_matrix;
using testing::relative_error;
using testing::with_spectrum;

double orthonormality_defect(const Matrix& q) {
  const Matrix g = matmul_tn(q, q);
  return max_abs_diff(g, Matrix::identity(q.cols()));
}

Matrix reconstruct(const SvdFactors& f) { return low_rank_reconstruct(f, f.rank()); }

TEST(Matrix, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(Matrix(0, 3), ShapeError);
  EXPECT_THROW(Matrix(2, 2, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Matrix(1, 2, {1, std::nan("")}), ParameterError);
  EXPECT_THROW(Matrix(1, 2, {1, INFINITY}), ParameterError);
}

TEST(Matmul, SmallCases) {
  const Matrix a = random_matrix(3, 4, 1);
  EXPECT_EQ(matmul(Matrix::identity(3), a), a);
  EXPECT_EQ(matmul(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3}, {4}})),
            Matrix::from_rows({{11}}));
}

TEST(Matmul, TransposeIdentity) {
  const Matrix a = random_matrix(3, 4, 2);
  const Matrix b = random_matrix(4, 2, 3);
  EXPECT_LE(max_abs_diff(matmul(a, b).transpose(), matmul(b.transpose(), a.transpose())), 1e-14);
  EXPECT_LE(max_abs_diff(matmul_tn(a.transpose(), b), matmul(a, b)), 1e-14);
}

TEST(Matmul, DimensionMismatchNamesShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3 * 2x3"), std::string::npos);
  }
}

TEST(SvdFull, KnownSpectra) {
  EXPECT_EQ(svd_full(Matrix::identity(2)).sigma, (std::vector<double>{1, 1}));
  const auto d = svd_full(Matrix::from_rows({{3, 0}, {0, 1}})).sigma;
  EXPECT_NEAR(d[0], 3, 1e-15);
  EXPECT_NEAR(d[1], 1, 1e-15);
  const auto z = svd_full(Matrix::from_rows({{0, 2}, {0, 0}}));
  EXPECT_NEAR(z.sigma[0], 2, 1e-15);
  EXPECT_EQ(z.sigma[1], 0.0);
  EXPECT_LE(orthonormality_defect(z.u), 1e-12);
  EXPECT_LE(orthonormality_defect(z.v), 1e-12);
}

TEST(SvdFull, ZeroMatrixHasOrthonormalFactors) {
  const auto f = svd_full(Matrix(4, 3));
  for (double s : f.sigma) EXPECT_EQ(s, 0.0);
  EXPECT_LE(orthonormality_defect(f.u), 1e-12);
  EXPECT_LE(orthonormality_defect(f.v), 1e-12);
}

TEST(SvdFull, RandomInvariants) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = dim(gen), n = dim(gen);
    const Matrix a = random_matrix(m, n, 100 + trial);
    const SvdFactors f = svd_full(a);
    ASSERT_EQ(f.rank(), std::min(m, n));
    EXPECT_TRUE(std::is_sorted(f.sigma.rbegin(), f.sigma.rend()));
    EXPECT_GE(f.sigma.back(), 0.0);
    EXPECT_LE(orthonormality_defect(f.u), 1e-8) << m << "x" << n;
    EXPECT_LE(orthonormality_defect(f.v), 1e-8) << m << "x" << n;
    EXPECT_LE(frobenius_norm(a - reconstruct(f)) / frobenius_norm(a), 1e-8);
    const double sum_sq = std::inner_product(f.sigma.begin(), f.sigma.end(), f.sigma.begin(), 0.0);
    EXPECT_LE(relative_error(frobenius_norm(a) * frobenius_norm(a), sum_sq), 1e-8);
  }
}

TEST(SvdFull, RankDeficientReconstruction) {
  const Matrix a = with_spectrum(12, 9, {4, 2, 1}, 5);
  const SvdFactors f = svd_full(a);
  EXPECT_NEAR(f.sigma[0], 4, 1e-12);
  EXPECT_NEAR(f.sigma[2], 1, 1e-12);
  EXPECT_LE(f.sigma[3], 1e-12);
  EXPECT_LE(orthonormality_defect(f.u), 1e-8);
  EXPECT_LE(frobenius_norm(a - reconstruct(f)), 1e-12);
}

TEST(SvdFull, Deterministic) {
  const Matrix a = random_matrix(17, 23, 9);
  const SvdFactors f1 = svd_full(a);
  const SvdFactors f2 = svd_full(a);
  EXPECT_EQ(f1.sigma, f2.sigma);
  EXPECT_EQ(f1.u, f2.u);
  EXPECT_EQ(f1.v, f2.v);
}

TEST(SvdTruncated, KnownSpectra) {
  // u·vᵀ with ‖u‖ = 2, ‖v‖ = 1.
  Matrix r1(4, 3);
  const double u[] = {1.0, -1.0, 1.0, 1.0};  // norm 2
  const double v[] = {0.6, 0.0, 0.8};         // norm 1
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) r1(i, j) = u[i] * v[j];
  EXPECT_NEAR(svd_truncated(r1, 1, 0).sigma[0], 2.0, 1e-12);

  const double diag[] = {5, 3, 1};
  const auto s = svd_truncated(Matrix::diagonal(diag), 2, 0).sigma;
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 5, 1e-12);
  EXPECT_NEAR(s[1], 3, 1e-12);
}

TEST(SvdTruncated, MatchesFullSvdTopK) {
  const Matrix a = random_matrix(20, 10, 42);
  const auto full = svd_full(a).sigma;
  const auto trunc = svd_truncated(a, 5, 42).sigma;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(relative_error(trunc[i], full[i]), 1e-6);
}

TEST(SvdTruncated, GappedSpectrumLargerMatrix) {
  // σ_k/σ_{k+1} = 1.5 on a matrix where oversampling does not cover the full rank.
  std::vector<double> sigma = {9, 7, 5, 3, 2};
  for (int i = 0; i < 40; ++i) sigma.push_back(1.3 - 0.02 * i);
  const Matrix a = with_spectrum(80, 60, sigma, 3);
  const auto full = svd_full(a).sigma;
  const SvdFactors t = svd_truncated(a, 5, 7);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(relative_error(t.sigma[i], full[i]), 1e-6);
  EXPECT_LE(orthonormality_defect(t.u), 1e-8);
  EXPECT_LE(orthonormality_defect(t.v), 1e-8);
}

TEST(SvdTruncated, BitReproducibleForSeed) {
  const Matrix a = random_matrix(40, 30, 8);
  const SvdFactors f1 = svd_truncated(a, 4, 99);
  const SvdFactors f2 = svd_truncated(a, 4, 99);
  EXPECT_EQ(f1.sigma, f2.sigma);
  EXPECT_EQ(f1.u, f2.u);
  EXPECT_EQ(f1.v, f2.v);
}

TEST(SvdTruncated, RankOutOfRange) {
  const Matrix a = random_matrix(5, 3, 1);
  EXPECT_THROW(svd_truncated(a, 0, 0), ParameterError);
  EXPECT_THROW(svd_truncated(a, 4, 0), ParameterError);
}

TEST(SpectralNorm, Examples) {
  EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0);
  EXPECT_NEAR(spectral_norm(Matrix::from_rows({{3, 0}, {0, 1}})), 3.0, 1e-6);
  const Matrix a = random_matrix(8, 8, 2024);
  EXPECT_LE(relative_error(spectral_norm(a), svd_full(a).sigma[0]), 1e-6);
}

TEST(SpectralNorm, StartVectorInNullSpace) {
  // The all-ones start is annihilated by [[1, -1]].
  EXPECT_NEAR(spectral_norm(Matrix::from_rows({{1, -1}})), std::sqrt(2.0), 1e-12);
}

TEST(SpectralNorm, NonConvergenceIsFlagged) {
  const Matrix a = with_spectrum(10, 10, {1.0, 0.999, 0.5}, 4);
  const SpectralNormEstimate est = spectral_norm_estimate(a, 1e-15, 2);
  EXPECT_FALSE(est.converged);
  EXPECT_LE(est.value, 1.0 + 1e-12);
  EXPECT_GT(est.value, 0.0);
  EXPECT_THROW(spectral_norm(a, 0.0), ParameterError);
}

TEST(FrobeniusNorm, Examples) {
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::from_rows({{3, 4}})), 5.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::identity(7)), std::sqrt(7.0));
}

TEST(Norms, InequalityChain) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = dim(gen), n = dim(gen);
    const Matrix a = random_matrix(m, n, 500 + trial);
    const double two = spectral_norm(a);
    const double fro = frobenius_norm(a);
    EXPECT_LE(two, fro + 1e-10);
    EXPECT_LE(fro, std::sqrt(static_cast<double>(std::min(m, n))) * two + 1e-8);
  }
}

TEST(LowRankReconstruct, Examples) {
  const Matrix d = Matrix::from_rows({{3, 0}, {0, 1}});
  const SvdFactors f = svd_full(d);
  EXPECT_LE(max_abs_diff(low_rank_reconstruct(f, 2), d), 1e-10);
  EXPECT_LE(max_abs_diff(low_rank_reconstruct(f, 1), Matrix::from_rows({{3, 0}, {0, 0}})), 1e-10);
  EXPECT_THROW(low_rank_reconstruct(f, 3), ParameterError);
}

TEST(LowRankReconstruct, EckartYoung) {
  const Matrix a = random_matrix(6, 4, 77);
  const SvdFactors f = svd_full(a);
  const Matrix b = low_rank_reconstruct(f, 2);
  const double err = frobenius_norm(a - b);
  const double tail = f.sigma[2] * f.sigma[2] + f.sigma[3] * f.sigma[3];
  EXPECT_LE(relative_error(err * err, tail), 1e-8);
}

TEST(Spectrum, PermutationInvariance) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(9, 6, 900 + trial);
    std::vector<std::size_t> pr(9), pc(6);
    std::iota(pr.begin(), pr.end(), 0);
    std::iota(pc.begin(), pc.end(), 0);
    std::shuffle(pr.begin(), pr.end(), gen);
    std::shuffle(pc.begin(), pc.end(), gen);
    Matrix p(9, 6);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 6; ++j) p(i, j) = a(pr[i], pc[j]);
    const auto s1 = svd_full(a).sigma;
    const auto s2 = svd_full(p).sigma;
    for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_NEAR(s1[i], s2[i], 1e-10);
  }
}

}  // namespace
}  // namespace spectraprune
