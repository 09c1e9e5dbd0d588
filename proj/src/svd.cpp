#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "spectraprune/error.hpp"
#include "spectraprune/linalg.hpp"
#include "spectraprune/random.hpp"

namespace spectraprune {

namespace {

// Column-major scratch: columns[j] is column j.
using Columns = std::vector<std::vector<double>>;

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

Columns to_columns(const Matrix& a) {
  Columns cols(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) cols[j][i] = a(i, j);
  return cols;
}

Matrix from_columns(const Columns& cols, std::size_t rows) {
  Matrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
  return m;
}

// Project x off the span of basis[0..count), twice for stability.
void orthogonalize_against(std::vector<double>& x, const Columns& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t b = 0; b < count; ++b) {
      const double proj = dot(basis[b], x);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= proj * basis[b][i];
    }
  }
}

// Unit vector orthogonal to basis[0..count), built from the standard basis
// vector with the largest residual.
std::vector<double> complement_vector(const Columns& basis, std::size_t count, std::size_t dim) {
  std::vector<double> best;
  double best_norm = -1.0;
  for (std::size_t e = 0; e < dim; ++e) {
    std::vector<double> x(dim, 0.0);
    x[e] = 1.0;
    orthogonalize_against(x, basis, count);
    const double nx = norm2(x);
    if (nx > best_norm) {
      best_norm = nx;
      best = std::move(x);
    }
    if (best_norm > 0.7) break;
  }
  for (double& v : best) v /= best_norm;
  return best;
}

// Orthonormalize columns in place (modified Gram-Schmidt with
// reorthogonalization). Numerically dependent columns are replaced by
// complement vectors so the result always has orthonormal columns.
void orthonormalize(Columns& cols) {
  if (cols.empty()) return;
  const std::size_t dim = cols[0].size();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double before = norm2(cols[j]);
    orthogonalize_against(cols[j], cols, j);
    const double after = norm2(cols[j]);
    if (after <= 1e-12 * before || after == 0.0) {
      cols[j] = complement_vector(cols, j, dim);
    } else {
      for (double& v : cols[j]) v /= after;
    }
  }
}

// One-sided Jacobi on a tall (rows >= cols) matrix given as columns.
SvdFactors jacobi_tall(Columns w, std::size_t rows) {
  const std::size_t n = w.size();
  Columns v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  const double tol = static_cast<double>(std::max<std::size_t>(rows, 1)) * DBL_EPSILON;
  // Columns below eps·‖A‖_F only carry rounding noise; rotating them can
  // cycle without reducing the off-diagonal mass.
  double total_sq = 0.0;
  for (const auto& col : w) total_sq += dot(col, col);
  const double negligible_sq = DBL_EPSILON * DBL_EPSILON * total_sq;
  bool converged = n < 2;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        if (std::min(alpha, beta) <= negligible_sq) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double wp = w[p][i];
          const double wq = w[q][i];
          w[p][i] = c * wp - s * wq;
          w[q][i] = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i];
          const double vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw ConvergenceError("svd_full: one-sided Jacobi did not converge within " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(w[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  Columns u_cols(n);
  Columns v_cols(n);
  std::vector<double> sorted_sigma(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    sorted_sigma[r] = sigma[j];
    v_cols[r] = v[j];
  }
  // Zero and noise-level singular values leave no reliable direction in W;
  // complete U with an orthonormal complement. Sorting puts them last.
  const double negligible = std::sqrt(negligible_sq);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    if (sorted_sigma[r] > negligible && sorted_sigma[r] > 0.0) {
      u_cols[r] = w[j];
      for (double& x : u_cols[r]) x /= sorted_sigma[r];
    } else {
      u_cols[r] = complement_vector(u_cols, r, rows);
    }
  }
  return SvdFactors{from_columns(u_cols, rows), std::move(sorted_sigma), from_columns(v_cols, n),
                    n};
}

std::string dims(const Matrix& a) { return a.shape_string(); }

}  // namespace

SvdFactors svd_full(const Matrix& a) {
  try {
    if (a.rows() >= a.cols()) return jacobi_tall(to_columns(a), a.rows());
    SvdFactors t = jacobi_tall(to_columns(a.transpose()), a.cols());
    return SvdFactors{std::move(t.v), std::move(t.sigma), std::move(t.u), t.rank_requested};
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " for a " + dims(a) + " matrix");
  }
}

SvdFactors svd_truncated(const Matrix& a, std::size_t k, std::uint64_t seed) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t min_dim = std::min(m, n);
  if (k < 1 || k > min_dim) {
    throw ParameterError("svd_truncated: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(min_dim) + "] for a " + dims(a) + " matrix");
  }
  const std::size_t l = std::min(k + kRandomizedOversampling, min_dim);

  Matrix omega(n, l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < l; ++j)
      omega(i, j) = standard_normal(seed, RandomStream::kGaussianSketch, i, j);

  Columns q = to_columns(matmul(a, omega));
  orthonormalize(q);

  auto project = [&](const Columns& basis) {
    // Bsmall = Qᵀ A, returned as its transpose (n×l) so Jacobi sees a tall matrix.
    Matrix qm = from_columns(basis, m);
    return matmul_tn(a, qm);
  };
  auto top_sigma = [&](const Columns& basis) {
    SvdFactors f = jacobi_tall(to_columns(project(basis)), n);
    f.sigma.resize(k);
    return f.sigma;
  };
  auto power_step = [&](Columns& basis) {
    Columns z = to_columns(matmul_tn(a, from_columns(basis, m)));
    orthonormalize(z);
    basis = to_columns(matmul(a, from_columns(z, n)));
    orthonormalize(basis);
  };

  for (int it = 0; it < kRandomizedPowerIterations; ++it) power_step(q);
  // Extra subspace iterations until the top-k Ritz values settle; a no-op
  // beyond one check when the spectrum has a clear gap after k.
  constexpr int kMaxExtraIterations = 50;
  std::vector<double> prev = top_sigma(q);
  for (int it = 0; it < kMaxExtraIterations; ++it) {
    power_step(q);
    std::vector<double> cur = top_sigma(q);
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double scale = std::max(cur[0], DBL_MIN);
      change = std::max(change, std::abs(cur[i] - prev[i]) / scale);
    }
    prev = std::move(cur);
    if (change <= 1e-14) break;
  }

  // Bsmallᵀ = V_b Σ U_bᵀ, so the left factor of Bsmall is the right factor here.
  SvdFactors small = jacobi_tall(to_columns(project(q)), n);
  const Matrix qm = from_columns(q, m);
  Matrix u_full = matmul(qm, small.v);

  Matrix u(m, k);
  Matrix v(n, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) u(i, j) = u_full(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) v(i, j) = small.u(i, j);
  small.sigma.resize(k);
  return SvdFactors{std::move(u), std::move(small.sigma), std::move(v), k};
}

Matrix low_rank_reconstruct(const SvdFactors& f, std::size_t k) {
  if (k > f.rank()) {
    throw ParameterError("low_rank_reconstruct: k=" + std::to_string(k) + " exceeds factor rank " +
                         std::to_string(f.rank()));
  }
  const std::size_t m = f.u.rows();
  const std::size_t n = f.v.rows();
  Matrix b(m, n);
  for (std::size_t r = 0; r < k; ++r) {
    const double s = f.sigma[r];
    for (std::size_t i = 0; i < m; ++i) {
      const double us = f.u(i, r) * s;
      if (us == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) b(i, j) += us * f.v(j, r);
    }
  }
  return b;
}

}  // namespace spectraprune
