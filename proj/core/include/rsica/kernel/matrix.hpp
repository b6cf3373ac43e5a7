#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace rsica::kernel {

// Dense row-major matrix of doubles with at least one row and column.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

// Shape mismatches throw InvalidArgument.
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
// Adds the 1 x cols row vector `bias` to every row.
Matrix add_row(const Matrix& a, const Matrix& bias);
// 1 x cols sums over rows.
Matrix column_sums(const Matrix& a);
Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix vconcat(const Matrix& top, const Matrix& bottom);
// Columns [first, first + count).
Matrix column_block(const Matrix& a, std::size_t first, std::size_t count);

double max_abs_difference(const Matrix& a, const Matrix& b);

// Entries uniform in [lo, hi).
Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                     double lo = -1.0, double hi = 1.0);

}  // namespace rsica::kernel
