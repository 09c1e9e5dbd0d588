#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "spectraprune/matrix.hpp"

namespace spectraprune {

enum class Method { kThreshold, kBernoulli, kLowRank };

std::string_view to_string(Method m) noexcept;
// Throws ParameterError for unknown names.
Method parse_method(std::string_view name);

inline constexpr double kDefaultQuantile = 0.3;
inline constexpr double kDefaultCutoff = 0.5;
inline constexpr std::size_t kDefaultRank = 5;

struct SparsifyConfig {
  Method method = Method::kThreshold;
  double keep_fraction = 1.0;  // threshold only
  double q = kDefaultQuantile;  // entries at or above the q-quantile stay as-is
  double c = kDefaultCutoff;    // sub-threshold entries with p < c are zeroed
  std::size_t rank_k = kDefaultRank;
  std::uint64_t seed = 0;
};

struct SparsifyResult {
  Matrix sparse;
  Matrix mask;  // 1 where the entry was retained (kept or sampled in)
  double threshold_t = 0.0;
  double achieved_sparsity = 0.0;
  double err_two_norm = 0.0;
  double err_f_norm = 0.0;
  // Quantile cut was exactly zero, so no entry fell in the sampled region.
  bool degenerate = false;
};

/// Value at position floor(n·q) of the ascending order of `values`
/// (introselect, expected O(n)).
double quantile_threshold(std::span<const double> values, double q);

/// Keeps the round(keep_fraction·m·n) largest-magnitude entries; ties go to the
/// lower row-major index. threshold_t is the smallest retained magnitude
/// (the largest magnitude when nothing is retained).
SparsifyResult threshold_sparsify(const Matrix& a, double keep_fraction);

/// Truncated Bernoulli sampling with t the q-quantile of |A|. Entries with
/// |A_ij| >= t are kept; below it p = (A_ij/t)², entries with p < c are
/// zeroed and the rest become Bern(p)·A_ij/p with the draw keyed by (seed, i, j).
SparsifyResult bernoulli_sparsify(const Matrix& a, double q, double c, std::uint64_t seed);

/// Same rule, but t and p_ij come from B, the rank-k truncated SVD
/// reconstruction of A. Retained entries still carry A's values.
SparsifyResult lowrank_sparsify(const Matrix& a, double q, double c, std::size_t rank_k,
                                std::uint64_t seed);

SparsifyResult sparsify(const Matrix& a, const SparsifyConfig& config);

/// (‖A − Ã‖₂, ‖A − Ã‖_F)
std::pair<double, double> sparsification_error(const Matrix& a, const Matrix& a_tilde);

/// Sampling probability applied to a sub-threshold entry; exposed for tests.
double sampling_probability(double guide, double t) noexcept;

}  // namespace spectraprune
