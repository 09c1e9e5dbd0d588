#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectraprune/matrix.hpp"

namespace spectraprune {

/// Convolution filters, layout [O][C][k_h][k_w].
class KernelTensor {
 public:
  KernelTensor(std::size_t out_channels, std::size_t in_channels, std::size_t k_h, std::size_t k_w);
  KernelTensor(std::size_t out_channels, std::size_t in_channels, std::size_t k_h, std::size_t k_w,
               std::vector<double> data);

  std::size_t out_channels() const noexcept { return o_; }
  std::size_t in_channels() const noexcept { return c_; }
  std::size_t k_h() const noexcept { return kh_; }
  std::size_t k_w() const noexcept { return kw_; }
  // Entries per output channel, C·k_h·k_w.
  std::size_t fan_in() const noexcept { return c_ * kh_ * kw_; }

  double operator()(std::size_t o, std::size_t c, std::size_t r, std::size_t s) const noexcept {
    return data_[((o * c_ + c) * kh_ + r) * kw_ + s];
  }
  double& operator()(std::size_t o, std::size_t c, std::size_t r, std::size_t s) noexcept {
    return data_[((o * c_ + c) * kh_ + r) * kw_ + s];
  }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> channel(std::size_t o) const noexcept {
    return std::span<const double>(data_).subspan(o * fan_in(), fan_in());
  }
  std::span<double> channel(std::size_t o) noexcept {
    return std::span<double>(data_).subspan(o * fan_in(), fan_in());
  }

  std::string shape_string() const;
  friend bool operator==(const KernelTensor&, const KernelTensor&) = default;

 private:
  std::size_t o_, c_, kh_, kw_;
  std::vector<double> data_;
};

/// Input signal, layout [C][H][W].
class SignalTensor {
 public:
  SignalTensor(std::size_t channels, std::size_t height, std::size_t width);
  SignalTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }

  double operator()(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * h_ + y) * w_ + x];
  }
  double& operator()(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * h_ + y) * w_ + x];
  }
  std::span<const double> data() const noexcept { return data_; }

  std::string shape_string() const;
  friend bool operator==(const SignalTensor&, const SignalTensor&) = default;

 private:
  std::size_t c_, h_, w_;
  std::vector<double> data_;
};

struct ConvGeometry {
  std::size_t out_h;
  std::size_t out_w;
};

// Throws ParameterError for stride 0 and ShapeError when the kernel does not
// fit the padded input.
ConvGeometry conv_geometry(const SignalTensor& x, std::size_t k_h, std::size_t k_w,
                           std::size_t stride, std::size_t pad);

/// (C·k_h·k_w) × O; column o is filter o flattened in (c, row, col) order.
Matrix unfold_kernel(const KernelTensor& t);
KernelTensor fold_kernel(const Matrix& a, std::size_t o, std::size_t c, std::size_t k_h,
                         std::size_t k_w);

/// (C·k_h·k_w) × (H_out·W_out), one receptive field per column, zero padding.
Matrix im2col(const SignalTensor& x, std::size_t k_h, std::size_t k_w, std::size_t stride,
              std::size_t pad);

/// Nested-loop cross-correlation (no kernel flip).
SignalTensor conv_direct(const SignalTensor& x, const KernelTensor& t, std::size_t stride,
                         std::size_t pad);

/// Zᵀ·A with Z = im2col(x) and A = unfold_kernel(t), reshaped to [O][H_out][W_out].
SignalTensor conv_as_matmul(const SignalTensor& x, const KernelTensor& t, std::size_t stride,
                            std::size_t pad);

double max_abs_diff(const SignalTensor& a, const SignalTensor& b);

struct ChannelScore {
  std::size_t channel_index;
  double l1_mass;  // Σ|T_o|
  double l2_mass;  // ‖column o of unfold_kernel(t)‖₂
};

/// One score per output channel, ascending by l1_mass then channel index.
std::vector<ChannelScore> channel_scores(const KernelTensor& t);

/// Zeroes the n_remove lowest-l1 channels; returns the kernel and the removed
/// indices in removal order.
std::pair<KernelTensor, std::vector<std::size_t>> prune_channels(const KernelTensor& t,
                                                                 std::size_t n_remove);

}  // namespace spectraprune
