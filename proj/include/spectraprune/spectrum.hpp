#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectraprune/conv.hpp"
#include "spectraprune/matrix.hpp"
#include "spectraprune/sparsify.hpp"

namespace spectraprune {

// Matrices with min(m, n) up to this size get an exact SVD in summaries.
inline constexpr std::size_t kFullSvdCutoff = 512;

struct SpectrumSummary {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> top_singular_values;
  double two_norm = 0.0;
  bool two_norm_converged = true;
  double f_norm = 0.0;
  std::size_t nnz = 0;
};

/// top_k is clipped to min(m, n). seed only matters above kFullSvdCutoff.
SpectrumSummary spectrum_summary(const Matrix& a, std::size_t top_k, std::uint64_t seed = 0);

struct SpectrumDelta {
  std::vector<double> original;
  std::vector<double> modified;
  double err_two_norm = 0.0;
  double err_f_norm = 0.0;
};

SpectrumDelta compare_spectra(const Matrix& a, const Matrix& a_tilde, std::size_t top_k,
                              std::uint64_t seed = 0);

struct NormTrajectory {
  std::vector<std::string> labels;
  std::vector<double> two_norms;
  std::vector<double> f_norms;
};

NormTrajectory trajectory_report(std::span<const std::pair<std::string, Matrix>> snapshots);

struct SweepRow {
  SparsifyConfig config;
  double achieved_sparsity = 0.0;
  double err_two_norm = 0.0;
  double err_f_norm = 0.0;
  double tilde_f_norm = 0.0;
  double threshold_t = 0.0;
  bool degenerate = false;
};

SweepRow make_sweep_row(const SparsifyConfig& config, const SparsifyResult& result);

/// Runs every config against the same matrix. Rows come back in config
/// order; max_threads > 1 evaluates configs concurrently without changing
/// the output.
std::vector<SweepRow> sweep_configs(const Matrix& a, std::span<const SparsifyConfig> configs,
                                    std::size_t max_threads = 1);

/// One row per value in `settings`: keep fractions for threshold, q values
/// for the sampling methods. Other parameters come from `fixed`.
std::vector<SweepRow> sparsity_sweep(const Matrix& a, Method method,
                                     std::span<const double> settings, const SparsifyConfig& fixed,
                                     std::uint64_t seed, std::size_t max_threads = 1);

struct ChannelSweepRow {
  std::size_t channel_index = 0;
  double l1_mass = 0.0;
  double l2_mass = 0.0;
  double tilde_f_norm = 0.0;  // ‖Ã‖_F after zeroing only this channel
};

/// Requires at least two output channels. Rows ordered by channel index.
std::vector<ChannelSweepRow> channel_sweep(const KernelTensor& t);

/// Spearman rank correlation (average ranks for ties).
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace spectraprune
