#include "spectraprune/spectrum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"

namespace spectraprune {

SpectrumSummary spectrum_summary(const Matrix& a, std::size_t top_k, std::uint64_t seed) {
  if (top_k < 1) throw ParameterError("spectrum_summary: top_k must be at least 1");
  const std::size_t min_dim = std::min(a.rows(), a.cols());
  const std::size_t k = std::min(top_k, min_dim);

  SpectrumSummary s;
  s.rows = a.rows();
  s.cols = a.cols();
  if (min_dim <= kFullSvdCutoff) {
    s.top_singular_values = svd_full(a).sigma;
    s.top_singular_values.resize(k);
  } else {
    s.top_singular_values = svd_truncated(a, k, seed).sigma;
  }
  const SpectralNormEstimate est = spectral_norm_estimate(a);
  s.two_norm = est.value;
  s.two_norm_converged = est.converged;
  s.f_norm = frobenius_norm(a);
  s.nnz = count_nonzero(a);
  return s;
}

SpectrumDelta compare_spectra(const Matrix& a, const Matrix& a_tilde, std::size_t top_k,
                              std::uint64_t seed) {
  if (a.rows() != a_tilde.rows() || a.cols() != a_tilde.cols()) {
    throw ShapeError("compare_spectra: shape mismatch " + a.shape_string() + " vs " +
                     a_tilde.shape_string());
  }
  SpectrumDelta d;
  d.original = spectrum_summary(a, top_k, seed).top_singular_values;
  d.modified = spectrum_summary(a_tilde, top_k, seed).top_singular_values;
  std::tie(d.err_two_norm, d.err_f_norm) = sparsification_error(a, a_tilde);
  return d;
}

NormTrajectory trajectory_report(std::span<const std::pair<std::string, Matrix>> snapshots) {
  if (snapshots.empty()) throw ParameterError("trajectory_report: no snapshots");
  const Matrix& first = snapshots.front().second;
  NormTrajectory traj;
  for (const auto& [label, m] : snapshots) {
    if (m.rows() != first.rows() || m.cols() != first.cols()) {
      throw ShapeError("trajectory_report: snapshot '" + label + "' is " + m.shape_string() +
                       " but '" + snapshots.front().first + "' is " + first.shape_string());
    }
    traj.labels.push_back(label);
    traj.two_norms.push_back(spectral_norm(m));
    traj.f_norms.push_back(frobenius_norm(m));
  }
  return traj;
}

SweepRow make_sweep_row(const SparsifyConfig& config, const SparsifyResult& result) {
  return SweepRow{config,
                  result.achieved_sparsity,
                  result.err_two_norm,
                  result.err_f_norm,
                  frobenius_norm(result.sparse),
                  result.threshold_t,
                  result.degenerate};
}

std::vector<SweepRow> sweep_configs(const Matrix& a, std::span<const SparsifyConfig> configs,
                                    std::size_t max_threads) {
  std::vector<SweepRow> rows(configs.size());
  const std::size_t workers = std::clamp<std::size_t>(max_threads, 1, std::max<std::size_t>(configs.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      rows[i] = make_sweep_row(configs[i], sparsify(a, configs[i]));
    }
    return rows;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        rows[i] = make_sweep_row(configs[i], sparsify(a, configs[i]));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<SweepRow> sparsity_sweep(const Matrix& a, Method method,
                                     std::span<const double> settings, const SparsifyConfig& fixed,
                                     std::uint64_t seed, std::size_t max_threads) {
  if (settings.empty()) throw ParameterError("sparsity_sweep: empty settings list");
  std::vector<SparsifyConfig> configs;
  configs.reserve(settings.size());
  for (double value : settings) {
    SparsifyConfig cfg = fixed;
    cfg.method = method;
    cfg.seed = seed;
    if (method == Method::kThreshold) {
      cfg.keep_fraction = value;
    } else {
      cfg.q = value;
    }
    configs.push_back(cfg);
  }
  return sweep_configs(a, configs, max_threads);
}

std::vector<ChannelSweepRow> channel_sweep(const KernelTensor& t) {
  if (t.out_channels() < 2) {
    throw ParameterError("channel_sweep: needs at least 2 output channels, got " +
                         std::to_string(t.out_channels()));
  }
  std::vector<ChannelScore> scores = channel_scores(t);
  std::sort(scores.begin(), scores.end(), [](const ChannelScore& x, const ChannelScore& y) {
    return x.channel_index < y.channel_index;
  });
  std::vector<ChannelSweepRow> rows;
  rows.reserve(scores.size());
  for (const ChannelScore& s : scores) {
    KernelTensor pruned = t;
    auto ch = pruned.channel(s.channel_index);
    std::fill(ch.begin(), ch.end(), 0.0);
    rows.push_back({s.channel_index, s.l1_mass, s.l2_mass, frobenius_norm(unfold_kernel(pruned))});
  }
  return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("spearman_correlation: need two equal-length samples of size >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace spectraprune
