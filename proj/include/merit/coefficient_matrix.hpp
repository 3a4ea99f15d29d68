#pragma once

// Column-sparse storage for the N x N self-expression coefficients. Each
// column lives on the probability simplex; the store never materializes an
// N x N dense object and keeps per-row aggregates (max, nnz) so that the
// row-sparsity regularizer costs O(nnz + N) per sweep.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "merit/dense_matrix.hpp"

namespace merit {

/// Entries below this are dropped after every Frank-Wolfe step.
inline constexpr double kPurgeThreshold = 1e-15;
/// Tolerance on |sum - 1| for a column to count as feasible.
inline constexpr double kSimplexTolerance = 1e-9;

struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// One coefficient column: strictly increasing indices, positive values.
/// An empty column is the all-zero starting point of a cold start and is
/// the only allowed infeasible state.
class SparseSimplexColumn {
 public:
  SparseSimplexColumn() = default;
  explicit SparseSimplexColumn(std::size_t dim) : dim_(dim) {}

  /// Validates ordering, positivity and the unit sum; throws InfeasibleError.
  static SparseSimplexColumn from_entries(std::size_t dim, std::vector<SparseEntry> entries);
  static SparseSimplexColumn unit(std::size_t dim, std::size_t j);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const SparseEntry> entries() const noexcept { return entries_; }

  /// O(log nnz) lookup; implicit zeros return 0.
  double value_at(std::size_t i) const;
  double sum() const;

  /// (1 - alpha) * c + alpha * e_j, followed by the purge pass.
  void fw_update(std::size_t j, double alpha);

  friend bool operator==(const SparseSimplexColumn&, const SparseSimplexColumn&) = default;

 private:
  friend class CoefficientMatrix;
  std::size_t dim_ = 0;
  std::vector<SparseEntry> entries_;
};

class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;
  /// N empty columns (the C = 0 cold start).
  explicit CoefficientMatrix(std::size_t n);
  /// Every column must be feasible; throws InfeasibleError otherwise.
  static CoefficientMatrix from_columns(std::vector<SparseSimplexColumn> columns);

  std::size_t dim() const noexcept { return columns_.size(); }
  const SparseSimplexColumn& column(std::size_t l) const { return columns_[l]; }
  std::span<const SparseSimplexColumn> columns() const noexcept { return columns_; }

  /// Frank-Wolfe step on column l toward vertex j. Row aggregates follow
  /// incrementally in O(nnz(c_l)); rows whose maximum may have shrunk are
  /// re-derived on the next row_max() query.
  void apply_fw_step(std::size_t l, std::size_t j, double alpha);

  /// Same update without touching shared row aggregates. Distinct columns
  /// may be stepped concurrently; call rebuild_aggregates() afterwards.
  void apply_fw_step_unsynced(std::size_t l, std::size_t j, double alpha);
  void rebuild_aggregates();

  void set_column(std::size_t l, SparseSimplexColumn column);

  /// Row maxima (implicit zeros included, so >= 0). Not safe to call while
  /// another thread mutates the matrix.
  const std::vector<double>& row_max() const;
  const std::vector<std::uint32_t>& row_nnz() const noexcept { return row_nnz_; }
  std::size_t nonzero_rows() const noexcept { return nonzero_rows_; }
  std::size_t total_nnz() const noexcept { return total_nnz_; }

  /// Logical footprint: entries * sizeof(SparseEntry) + aggregate words.
  std::size_t accounted_bytes() const noexcept;
  static constexpr std::size_t kAggregateBytesPerRow =
      sizeof(double) + 2 * sizeof(std::uint32_t);

  /// True when every column is nonempty, nonnegative and sums to 1.
  bool is_feasible(double tol = kSimplexTolerance) const;

  /// Distinct row indices holding at least one explicit entry, ascending.
  std::vector<std::size_t> support_rows() const;

 private:
  void bump_row(std::size_t row, double value, std::size_t owner);
  void settle() const;

  std::vector<SparseSimplexColumn> columns_;
  mutable std::vector<double> row_max_;
  mutable std::vector<std::uint32_t> row_owner_;
  mutable bool max_stale_ = false;
  std::vector<std::uint32_t> row_nnz_;
  std::size_t nonzero_rows_ = 0;
  std::size_t total_nnz_ = 0;
  bool aggregates_stale_ = false;
};

/// Sum_{(i,v) in c} v * X(:, i). Cost O(M * nnz(c)).
std::vector<double> mat_vec(const DenseMatrix& x, const SparseSimplexColumn& c);

/// p = X^T (X c - x_l), formed through an M-length intermediate.
std::vector<double> residual_gradient_column(const DenseMatrix& x, const SparseSimplexColumn& c,
                                             std::size_t l);

/// ||C(n,:)||_inf for every row n.
std::vector<double> row_inf_norms(const CoefficientMatrix& c);

}  // namespace merit
