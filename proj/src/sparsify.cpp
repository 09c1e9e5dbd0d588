#include "spectraprune/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"
#include "spectraprune/random.hpp"

namespace spectraprune {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::kThreshold: return "threshold";
    case Method::kBernoulli: return "bernoulli";
    case Method::kLowRank: return "lowrank";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "threshold") return Method::kThreshold;
  if (name == "bernoulli") return Method::kBernoulli;
  if (name == "lowrank") return Method::kLowRank;
  throw ParameterError("unknown sparsification method '" + std::string(name) + "'");
}

double quantile_threshold(std::span<const double> values, double q) {
  if (values.empty()) throw ParameterError("quantile_threshold: empty input");
  if (!(q > 0.0 && q < 1.0)) {
    throw ParameterError("quantile_threshold: q=" + std::to_string(q) + " outside (0, 1)");
  }
  std::vector<double> scratch(values.begin(), values.end());
  // Same truncation as int(n * q).
  const auto pos = static_cast<std::size_t>(static_cast<double>(scratch.size()) * q);
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(std::min(pos, scratch.size() - 1));
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

double sampling_probability(double guide, double t) noexcept {
  const double r = guide / t;
  return std::min(r * r, 1.0);
}

namespace {

void finish(const Matrix& a, SparsifyResult& result) {
  const std::size_t zeros = result.sparse.size() - count_nonzero(result.sparse);
  result.achieved_sparsity = static_cast<double>(zeros) / static_cast<double>(a.size());
  std::tie(result.err_two_norm, result.err_f_norm) = sparsification_error(a, result.sparse);
}

void check_sampling_params(double q, double c) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("q=" + std::to_string(q) + " outside (0, 1)");
  if (!(c >= 0.0 && c < 1.0)) throw ParameterError("c=" + std::to_string(c) + " outside [0, 1)");
}

// Shared truncation + sampling rule. `guide` decides t and p_ij; values come
// from `a`.
SparsifyResult sample_guided(const Matrix& a, const Matrix& guide, double q, double c,
                             std::uint64_t seed) {
  std::vector<double> magnitudes(guide.size());
  std::transform(guide.data().begin(), guide.data().end(), magnitudes.begin(),
                 [](double x) { return std::abs(x); });
  const double t = quantile_threshold(magnitudes, q);

  SparsifyResult result{a, Matrix(a.rows(), a.cols()), t};
  result.degenerate = (t == 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double g = guide(i, j);
      if (std::abs(g) >= t) {
        result.mask(i, j) = 1.0;
        continue;
      }
      const double p = sampling_probability(g, t);
      if (p < c) {
        result.sparse(i, j) = 0.0;
        continue;
      }
      if (uniform01(seed, RandomStream::kBernoulli, i, j) < p) {
        result.sparse(i, j) = a(i, j) / p;
        result.mask(i, j) = 1.0;
      } else {
        result.sparse(i, j) = 0.0;
      }
    }
  }
  finish(a, result);
  return result;
}

}  // namespace

SparsifyResult threshold_sparsify(const Matrix& a, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ParameterError("keep_fraction=" + std::to_string(keep_fraction) + " outside (0, 1]");
  }
  const std::size_t total = a.size();
  const auto keep = std::min(
      total, static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(total) + 0.5)));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto values = a.data();
  auto by_magnitude = [&](std::size_t x, std::size_t y) {
    const double mx = std::abs(values[x]);
    const double my = std::abs(values[y]);
    return mx != my ? mx > my : x < y;
  };
  if (keep < total) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                     by_magnitude);
  }

  SparsifyResult result{Matrix(a.rows(), a.cols()), Matrix(a.rows(), a.cols())};
  double smallest_kept = 0.0;
  for (std::size_t r = 0; r < keep; ++r) {
    const std::size_t k = order[r];
    result.sparse.data()[k] = values[k];
    result.mask.data()[k] = 1.0;
    smallest_kept = r == 0 ? std::abs(values[k]) : std::min(smallest_kept, std::abs(values[k]));
  }
  if (keep == 0) {
    for (double x : values) smallest_kept = std::max(smallest_kept, std::abs(x));
  }
  result.threshold_t = smallest_kept;
  finish(a, result);
  return result;
}

SparsifyResult bernoulli_sparsify(const Matrix& a, double q, double c, std::uint64_t seed) {
  check_sampling_params(q, c);
  return sample_guided(a, a, q, c, seed);
}

SparsifyResult lowrank_sparsify(const Matrix& a, double q, double c, std::size_t rank_k,
                                std::uint64_t seed) {
  check_sampling_params(q, c);
  const std::size_t min_dim = std::min(a.rows(), a.cols());
  if (rank_k < 1 || rank_k > min_dim) {
    throw ParameterError("rank_k=" + std::to_string(rank_k) + " outside [1, " +
                         std::to_string(min_dim) + "] for a " + a.shape_string() + " matrix");
  }
  const Matrix guide = low_rank_reconstruct(svd_truncated(a, rank_k, seed), rank_k);
  return sample_guided(a, guide, q, c, seed);
}

SparsifyResult sparsify(const Matrix& a, const SparsifyConfig& config) {
  switch (config.method) {
    case Method::kThreshold: return threshold_sparsify(a, config.keep_fraction);
    case Method::kBernoulli: return bernoulli_sparsify(a, config.q, config.c, config.seed);
    case Method::kLowRank:
      return lowrank_sparsify(a, config.q, config.c, config.rank_k, config.seed);
  }
  throw ParameterError("unknown sparsification method");
}

std::pair<double, double> sparsification_error(const Matrix& a, const Matrix& a_tilde) {
  if (a.rows() != a_tilde.rows() || a.cols() != a_tilde.cols()) {
    throw ShapeError("sparsification_error: shape mismatch " + a.shape_string() + " vs " +
                     a_tilde.shape_string());
  }
  const Matrix diff = a - a_tilde;
  return {spectral_norm(diff), frobenius_norm(diff)};
}

}  // namespace spectraprune
