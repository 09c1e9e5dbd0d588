#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spectraprune {

/// Dense row-major matrix of doubles. Entries are finite and both dimensions
/// are at least one; the constructors enforce this.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  // Nested initializer for tests and small literals; rows must be equal length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  std::vector<double> column(std::size_t j) const;
  Matrix transpose() const;

  // "3x4"
  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);
std::size_t count_nonzero(const Matrix& a) noexcept;

}  // namespace spectraprune
