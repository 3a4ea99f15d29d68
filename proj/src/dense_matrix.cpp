#include "merit/dense_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "merit/error.hpp"

namespace merit {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ContractError("DenseMatrix: data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!all_finite()) throw ContractError("DenseMatrix: non-finite entry");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractError("DenseMatrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  if (!m.all_finite()) throw ContractError("DenseMatrix: non-finite entry");
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::select_cols(std::span<const std::size_t> indices) const {
  DenseMatrix out(rows_, indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= cols_) throw ContractError("select_cols: index out of range");
    std::ranges::copy(col(indices[k]), out.col(k).begin());
  }
  return out;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> indices) const {
  DenseMatrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k)
    if (indices[k] >= rows_) throw ContractError("select_rows: index out of range");
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t k = 0; k < indices.size(); ++k) out(k, j) = (*this)(indices[k], j);
  return out;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

bool DenseMatrix::all_finite() const {
  return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace merit
