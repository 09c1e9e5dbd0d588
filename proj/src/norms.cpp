#include <algorithm>
#include <cmath>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"

namespace spectraprune {

namespace {

std::vector<double> multiply(const Matrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> multiply_transpose(const Matrix& a, const std::vector<double>& y) {
  std::vector<double> x(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    const double yi = y[i];
    for (std::size_t j = 0; j < a.cols(); ++j) x[j] += row[j] * yi;
  }
  return x;
}

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double euclidean_norm(std::span<const double> values) noexcept {
  // Scaled accumulation avoids overflow for large entries.
  double scale = 0.0;
  for (double x : values) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : values) {
    const double r = x / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double frobenius_norm(const Matrix& a) noexcept { return euclidean_norm(a.data()); }

SpectralNormEstimate spectral_norm_estimate(const Matrix& a, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ParameterError("spectral_norm: tol must be positive");
  if (max_iter < 1) throw ParameterError("spectral_norm: max_iter must be at least 1");

  const std::size_t n = a.cols();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> av = multiply(a, v);
  double sigma = norm(av);

  if (sigma == 0.0) {
    // The all-ones start can lie in the null space of a nonzero matrix
    // (e.g. [[1, -1]]); restart from the heaviest column's unit vector.
    std::size_t heaviest = 0;
    double heaviest_norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
      if (s > heaviest_norm) {
        heaviest_norm = s;
        heaviest = j;
      }
    }
    if (heaviest_norm == 0.0) return {0.0, true, 0};
    std::fill(v.begin(), v.end(), 0.0);
    v[heaviest] = 1.0;
    av = multiply(a, v);
    sigma = norm(av);
  }

  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> z = multiply_transpose(a, av);
    const double zn = norm(z);
    if (zn == 0.0) return {sigma, true, it};
    for (std::size_t j = 0; j < n; ++j) v[j] = z[j] / zn;
    av = multiply(a, v);
    const double next = norm(av);
    const bool done = std::abs(next - sigma) <= tol * next;
    sigma = std::max(sigma, next);
    if (done) return {sigma, true, it};
  }
  return {sigma, false, max_iter};
}

double spectral_norm(const Matrix& a, double tol, int max_iter) {
  return spectral_norm_estimate(a, tol, max_iter).value;
}

}  // namespace spectraprune
