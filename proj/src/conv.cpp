#include "spectraprune/conv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"

namespace spectraprune {

namespace {

void require_finite(std::span<const double> data, const char* what) {
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      throw ParameterError(std::string(what) + ": non-finite entry at flat index " +
                           std::to_string(k));
    }
  }
}

}  // namespace

KernelTensor::KernelTensor(std::size_t o, std::size_t c, std::size_t k_h, std::size_t k_w)
    : KernelTensor(o, c, k_h, k_w, std::vector<double>(o * c * k_h * k_w)) {}

KernelTensor::KernelTensor(std::size_t o, std::size_t c, std::size_t k_h, std::size_t k_w,
                           std::vector<double> data)
    : o_(o), c_(c), kh_(k_h), kw_(k_w), data_(std::move(data)) {
  if (o == 0 || c == 0 || k_h == 0 || k_w == 0) {
    throw ShapeError("kernel dimensions must be positive, got " + shape_string());
  }
  if (data_.size() != o * c * k_h * k_w) {
    throw ShapeError("kernel data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
  }
  require_finite(data_, "kernel");
}

std::string KernelTensor::shape_string() const {
  return std::to_string(o_) + "x" + std::to_string(c_) + "x" + std::to_string(kh_) + "x" +
         std::to_string(kw_);
}

SignalTensor::SignalTensor(std::size_t c, std::size_t h, std::size_t w)
    : SignalTensor(c, h, w, std::vector<double>(c * h * w)) {}

SignalTensor::SignalTensor(std::size_t c, std::size_t h, std::size_t w, std::vector<double> data)
    : c_(c), h_(h), w_(w), data_(std::move(data)) {
  if (c == 0 || h == 0 || w == 0) {
    throw ShapeError("signal dimensions must be positive, got " + shape_string());
  }
  if (data_.size() != c * h * w) {
    throw ShapeError("signal data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
  }
  require_finite(data_, "signal");
}

std::string SignalTensor::shape_string() const {
  return std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
}

ConvGeometry conv_geometry(const SignalTensor& x, std::size_t k_h, std::size_t k_w,
                           std::size_t stride, std::size_t pad) {
  if (stride < 1) throw ParameterError("stride must be at least 1");
  const std::size_t padded_h = x.height() + 2 * pad;
  const std::size_t padded_w = x.width() + 2 * pad;
  if (k_h > padded_h || k_w > padded_w) {
    throw ShapeError("kernel " + std::to_string(k_h) + "x" + std::to_string(k_w) +
                     " larger than padded input " + std::to_string(padded_h) + "x" +
                     std::to_string(padded_w));
  }
  return {(padded_h - k_h) / stride + 1, (padded_w - k_w) / stride + 1};
}

Matrix unfold_kernel(const KernelTensor& t) {
  const std::size_t rows = t.fan_in();
  Matrix a(rows, t.out_channels());
  for (std::size_t o = 0; o < t.out_channels(); ++o) {
    const auto ch = t.channel(o);
    for (std::size_t r = 0; r < rows; ++r) a(r, o) = ch[r];
  }
  return a;
}

KernelTensor fold_kernel(const Matrix& a, std::size_t o, std::size_t c, std::size_t k_h,
                         std::size_t k_w) {
  if (a.rows() != c * k_h * k_w || a.cols() != o) {
    throw ShapeError("fold_kernel: matrix " + a.shape_string() + " does not match kernel " +
                     std::to_string(o) + "x" + std::to_string(c) + "x" + std::to_string(k_h) +
                     "x" + std::to_string(k_w) + " (expects " + std::to_string(c * k_h * k_w) +
                     "x" + std::to_string(o) + ")");
  }
  KernelTensor t(o, c, k_h, k_w);
  for (std::size_t ch = 0; ch < o; ++ch) {
    auto dst = t.channel(ch);
    for (std::size_t r = 0; r < dst.size(); ++r) dst[r] = a(r, ch);
  }
  return t;
}

Matrix im2col(const SignalTensor& x, std::size_t k_h, std::size_t k_w, std::size_t stride,
              std::size_t pad) {
  const ConvGeometry g = conv_geometry(x, k_h, k_w, stride, pad);
  Matrix z(x.channels() * k_h * k_w, g.out_h * g.out_w);
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const std::size_t col = oy * g.out_w + ox;
      std::size_t row = 0;
      for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t r = 0; r < k_h; ++r) {
          for (std::size_t s = 0; s < k_w; ++s, ++row) {
            // Padded coordinates; anything outside the signal reads as zero.
            const std::size_t py = oy * stride + r;
            const std::size_t px = ox * stride + s;
            if (py < pad || px < pad || py - pad >= x.height() || px - pad >= x.width()) continue;
            z(row, col) = x(c, py - pad, px - pad);
          }
        }
      }
    }
  }
  return z;
}

namespace {

void require_channels_match(const SignalTensor& x, const KernelTensor& t) {
  if (x.channels() != t.in_channels()) {
    throw ShapeError("signal " + x.shape_string() + " has " + std::to_string(x.channels()) +
                     " channels but kernel " + t.shape_string() + " expects " +
                     std::to_string(t.in_channels()));
  }
}

}  // namespace

SignalTensor conv_direct(const SignalTensor& x, const KernelTensor& t, std::size_t stride,
                         std::size_t pad) {
  require_channels_match(x, t);
  const ConvGeometry g = conv_geometry(x, t.k_h(), t.k_w(), stride, pad);
  SignalTensor y(t.out_channels(), g.out_h, g.out_w);
  for (std::size_t o = 0; o < t.out_channels(); ++o) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        double acc = 0.0;
        for (std::size_t c = 0; c < x.channels(); ++c) {
          for (std::size_t r = 0; r < t.k_h(); ++r) {
            const std::size_t py = oy * stride + r;
            if (py < pad || py - pad >= x.height()) continue;
            for (std::size_t s = 0; s < t.k_w(); ++s) {
              const std::size_t px = ox * stride + s;
              if (px < pad || px - pad >= x.width()) continue;
              acc += t(o, c, r, s) * x(c, py - pad, px - pad);
            }
          }
        }
        y(o, oy, ox) = acc;
      }
    }
  }
  return y;
}

SignalTensor conv_as_matmul(const SignalTensor& x, const KernelTensor& t, std::size_t stride,
                            std::size_t pad) {
  require_channels_match(x, t);
  const ConvGeometry g = conv_geometry(x, t.k_h(), t.k_w(), stride, pad);
  const Matrix z = im2col(x, t.k_h(), t.k_w(), stride, pad);
  const Matrix prod = matmul_tn(z, unfold_kernel(t));  // positions × O
  SignalTensor y(t.out_channels(), g.out_h, g.out_w);
  for (std::size_t o = 0; o < t.out_channels(); ++o)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox) y(o, oy, ox) = prod(oy * g.out_w + ox, o);
  return y;
}

double max_abs_diff(const SignalTensor& a, const SignalTensor& b) {
  if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("max_abs_diff: shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  }
  return worst;
}

std::vector<ChannelScore> channel_scores(const KernelTensor& t) {
  std::vector<ChannelScore> scores;
  scores.reserve(t.out_channels());
  for (std::size_t o = 0; o < t.out_channels(); ++o) {
    double l1 = 0.0;
    for (double v : t.channel(o)) l1 += std::abs(v);
    scores.push_back({o, l1, euclidean_norm(t.channel(o))});
  }
  std::stable_sort(scores.begin(), scores.end(), [](const ChannelScore& a, const ChannelScore& b) {
    return a.l1_mass < b.l1_mass;
  });
  return scores;
}

std::pair<KernelTensor, std::vector<std::size_t>> prune_channels(const KernelTensor& t,
                                                                 std::size_t n_remove) {
  if (n_remove >= t.out_channels()) {
    throw ParameterError("prune_channels: cannot remove " + std::to_string(n_remove) + " of " +
                         std::to_string(t.out_channels()) + " channels");
  }
  const auto scores = channel_scores(t);
  KernelTensor pruned = t;
  std::vector<std::size_t> removed;
  removed.reserve(n_remove);
  for (std::size_t r = 0; r < n_remove; ++r) {
    const std::size_t o = scores[r].channel_index;
    auto ch = pruned.channel(o);
    std::fill(ch.begin(), ch.end(), 0.0);
    removed.push_back(o);
  }
  return {std::move(pruned), std::move(removed)};
}

}  // namespace spectraprune
