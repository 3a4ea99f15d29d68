#pragma once

#include <cstddef>
#include <vector>

#include "merit/dense_matrix.hpp"

namespace merit {

/// Symmetric matrix stored as its packed upper triangle.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n) : n_(n), packed_(n * (n + 1) / 2, 0.0) {}
  /// Takes the upper triangle of a square matrix.
  static SymmetricMatrix from_upper(const DenseMatrix& m);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return packed_[slot(i, j)]; }
  void set(std::size_t i, std::size_t j, double v) { packed_[slot(i, j)] = v; }
  void add(std::size_t i, std::size_t j, double v) { packed_[slot(i, j)] += v; }

  DenseMatrix to_dense() const;
  SymmetricMatrix principal_submatrix(const std::vector<std::size_t>& idx) const;
  std::vector<double> column_sq_norms() const;
  double frobenius_norm() const;
  double max_abs_row_sum() const;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return j * (j + 1) / 2 + i;
  }
  std::size_t n_ = 0;
  std::vector<double> packed_;
};

struct EigenPairs {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // n x k, orthonormal columns
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||A U - U Lambda||_F
};

/// Leading k eigenpairs by algebraic value. Orthogonal iteration on
/// A + sI with s the largest absolute row sum (so the shifted matrix is
/// positive semidefinite), Rayleigh-Ritz after every step. Stops when
/// ||AU - U Lambda||_F <= tol ||A||_F; otherwise returns the last iterate
/// with converged = false.
EigenPairs top_eigenpairs(const SymmetricMatrix& a, std::size_t k, double tol = 1e-8,
                          std::size_t max_iters = 1000);

/// Smallest set of nodes (largest column energy first, lower index on ties)
/// carrying at least `fraction` of the total squared column norm; ascending.
std::vector<std::size_t> energy_filter(const SymmetricMatrix& a, double fraction);

/// U^T X with U the top `target_rows` eigenvectors of X.
DenseMatrix reduce_rows(const SymmetricMatrix& x, std::size_t target_rows, double tol = 1e-8,
                        std::size_t max_iters = 1000);

}  // namespace merit
