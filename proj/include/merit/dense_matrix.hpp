#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace merit {

/// Column-major real matrix. Holds data matrices, bases and embeddings.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of column-major `data`; throws ContractError on a size
  /// mismatch or a non-finite entry.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  /// Row-major literal, convenient in tests: from_rows({{1, 0}, {0, 1}}).
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }

  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  DenseMatrix transposed() const;
  /// Columns `indices` in the given order.
  DenseMatrix select_cols(std::span<const std::size_t> indices) const;
  /// Rows `indices` in the given order.
  DenseMatrix select_rows(std::span<const std::size_t> indices) const;

  double frobenius_norm() const;
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace merit
