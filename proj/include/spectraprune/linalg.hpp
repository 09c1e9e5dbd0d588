#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spectraprune/matrix.hpp"

namespace spectraprune {

/// Thin SVD factors A ≈ U·diag(sigma)·Vᵀ with U (m×r), V (n×r) orthonormal
/// columns and sigma non-increasing.
struct SvdFactors {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
  std::size_t rank_requested;

  std::size_t rank() const noexcept { return sigma.size(); }
};

inline constexpr int kJacobiMaxSweeps = 60;
inline constexpr std::size_t kRandomizedOversampling = 10;
inline constexpr int kRandomizedPowerIterations = 2;

/// Full thin SVD via one-sided Jacobi rotations, r = min(m, n).
/// Throws ConvergenceError if the sweep cap is reached.
SvdFactors svd_full(const Matrix& a);

/// Top-k SVD by randomized range finding (oversampling 10, at least two
/// power iterations). The Gaussian test matrix is drawn from the counter RNG
/// so the result is a pure function of (a, k, seed).
SvdFactors svd_truncated(const Matrix& a, std::size_t k, std::uint64_t seed);

struct SpectralNormEstimate {
  double value;
  bool converged;
  int iterations;
};

inline constexpr double kPowerIterationTol = 1e-10;
inline constexpr int kPowerIterationMaxIter = 1000;

/// Power iteration on AᵀA from the normalized all-ones vector. Never exceeds
/// σ₁; when max_iter is hit the best estimate is returned with converged=false.
SpectralNormEstimate spectral_norm_estimate(const Matrix& a, double tol = kPowerIterationTol,
                                            int max_iter = kPowerIterationMaxIter);

double spectral_norm(const Matrix& a, double tol = kPowerIterationTol,
                     int max_iter = kPowerIterationMaxIter);

double frobenius_norm(const Matrix& a) noexcept;
// Same accumulation as frobenius_norm, over a flat range.
double euclidean_norm(std::span<const double> values) noexcept;

/// Σ_{i<k} sigma[i]·U[:,i]·V[:,i]ᵀ
Matrix low_rank_reconstruct(const SvdFactors& f, std::size_t k);

}  // namespace spectraprune
