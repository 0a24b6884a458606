#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qek {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// New matrix holding the listed rows, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;
  /// New matrix holding the first `count` columns.
  Matrix leading_columns(std::size_t count) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SymmetricEigen {
  std::vector<double> values;  // unsorted, in diagonal order
  Matrix vectors;              // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-15,
                            int max_sweeps = 100);

}  // namespace qek
