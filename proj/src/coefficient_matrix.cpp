#include "merit/coefficient_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "merit/error.hpp"

namespace merit {

// ---------------------------------------------------------------------------
// SparseSimplexColumn

SparseSimplexColumn SparseSimplexColumn::from_entries(std::size_t dim,
                                                      std::vector<SparseEntry> entries) {
  double total = 0.0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.index >= dim) throw InfeasibleError("column entry index out of range");
    if (k > 0 && entries[k - 1].index >= e.index)
      throw InfeasibleError("column indices must be strictly increasing");
    if (!(e.value > 0.0) || !std::isfinite(e.value))
      throw InfeasibleError("column values must be positive and finite");
    total += e.value;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance)
    throw InfeasibleError("column sums to " + std::to_string(total) + ", expected 1");
  SparseSimplexColumn c(dim);
  c.entries_ = std::move(entries);
  return c;
}

SparseSimplexColumn SparseSimplexColumn::unit(std::size_t dim, std::size_t j) {
  if (j >= dim) throw ContractError("unit column index out of range");
  SparseSimplexColumn c(dim);
  c.entries_.push_back({static_cast<std::uint32_t>(j), 1.0});
  return c;
}

double SparseSimplexColumn::value_at(std::size_t i) const {
  auto it = std::ranges::lower_bound(entries_, i, {}, &SparseEntry::index);
  return (it != entries_.end() && it->index == i) ? it->value : 0.0;
}

double SparseSimplexColumn::sum() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value;
  return s;
}

void SparseSimplexColumn::fw_update(std::size_t j, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("step size must lie in [0, 1]");
  if (j >= dim_) throw ContractError("vertex index out of range");
  if (alpha == 0.0) return;
  const auto jj = static_cast<std::uint32_t>(j);
  if (alpha == 1.0) {
    entries_.assign(1, SparseEntry{jj, 1.0});
    return;
  }
  const double keep = 1.0 - alpha;
  std::vector<SparseEntry> next;
  next.reserve(entries_.size() + 1);
  bool placed = false;
  for (const auto& e : entries_) {
    if (!placed && e.index >= jj) {
      if (e.index == jj) {
        next.push_back({jj, keep * e.value + alpha});
        placed = true;
        continue;
      }
      next.push_back({jj, alpha});
      placed = true;
    }
    const double v = keep * e.value;
    if (v >= kPurgeThreshold) next.push_back({e.index, v});
  }
  if (!placed) next.push_back({jj, alpha});
  entries_ = std::move(next);
}

// ---------------------------------------------------------------------------
// CoefficientMatrix

CoefficientMatrix::CoefficientMatrix(std::size_t n)
    : columns_(n, SparseSimplexColumn(n)),
      row_max_(n, 0.0),
      row_owner_(n, 0),
      row_nnz_(n, 0) {}

CoefficientMatrix CoefficientMatrix::from_columns(std::vector<SparseSimplexColumn> columns) {
  const std::size_t n = columns.size();
  for (std::size_t l = 0; l < n; ++l) {
    const auto& c = columns[l];
    if (c.dim() != n)
      throw InfeasibleError("column " + std::to_string(l) + " has dimension " +
                            std::to_string(c.dim()) + ", expected " + std::to_string(n));
    if (c.empty()) throw InfeasibleError("column " + std::to_string(l) + " is empty");
    if (std::abs(c.sum() - 1.0) > kSimplexTolerance)
      throw InfeasibleError("column " + std::to_string(l) + " does not sum to 1");
  }
  CoefficientMatrix m;
  m.columns_ = std::move(columns);
  m.rebuild_aggregates();
  return m;
}

void CoefficientMatrix::bump_row(std::size_t row, double value, std::size_t owner) {
  if (value > row_max_[row]) {
    row_max_[row] = value;
    row_owner_[row] = static_cast<std::uint32_t>(owner);
  }
}

void CoefficientMatrix::apply_fw_step(std::size_t l, std::size_t j, double alpha) {
  if (l >= dim()) throw ContractError("column index out of range");
  auto& col = columns_[l];
  const std::vector<SparseEntry> before = col.entries_;
  col.fw_update(j, alpha);
  const auto& after = col.entries_;

  // Merge the old and new supports to update counts and maxima.
  std::size_t a = 0, b = 0;
  while (a < before.size() || b < after.size()) {
    const bool has_old = a < before.size();
    const bool has_new = b < after.size();
    if (has_old && (!has_new || before[a].index < after[b].index)) {
      const std::size_t row = before[a].index;
      if (--row_nnz_[row] == 0) --nonzero_rows_;
      --total_nnz_;
      if (row_owner_[row] == l) max_stale_ = true;
      ++a;
    } else if (has_new && (!has_old || after[b].index < before[a].index)) {
      const std::size_t row = after[b].index;
      if (row_nnz_[row]++ == 0) ++nonzero_rows_;
      ++total_nnz_;
      if (!max_stale_) bump_row(row, after[b].value, l);
      ++b;
    } else {
      const std::size_t row = after[b].index;
      if (!max_stale_) {
        if (after[b].value < before[a].value && row_owner_[row] == l) max_stale_ = true;
        else bump_row(row, after[b].value, l);
      }
      ++a;
      ++b;
    }
  }
}

void CoefficientMatrix::apply_fw_step_unsynced(std::size_t l, std::size_t j, double alpha) {
  columns_[l].fw_update(j, alpha);
  aggregates_stale_ = true;
}

void CoefficientMatrix::set_column(std::size_t l, SparseSimplexColumn column) {
  if (l >= dim() || column.dim() != dim()) throw ContractError("set_column: shape mismatch");
  for (const auto& e : columns_[l].entries()) {
    if (--row_nnz_[e.index] == 0) --nonzero_rows_;
    --total_nnz_;
  }
  columns_[l] = std::move(column);
  for (const auto& e : columns_[l].entries()) {
    if (row_nnz_[e.index]++ == 0) ++nonzero_rows_;
    ++total_nnz_;
  }
  max_stale_ = true;
}

void CoefficientMatrix::rebuild_aggregates() {
  const std::size_t n = dim();
  row_nnz_.assign(n, 0);
  row_max_.assign(n, 0.0);
  row_owner_.assign(n, 0);
  total_nnz_ = 0;
  for (std::size_t l = 0; l < n; ++l) {
    for (const auto& e : columns_[l].entries()) {
      ++row_nnz_[e.index];
      bump_row(e.index, e.value, l);
    }
    total_nnz_ += columns_[l].size();
  }
  nonzero_rows_ = static_cast<std::size_t>(std::ranges::count_if(row_nnz_, [](auto k) { return k > 0; }));
  max_stale_ = false;
  aggregates_stale_ = false;
}

void CoefficientMatrix::settle() const {
  std::ranges::fill(row_max_, 0.0);
  std::ranges::fill(row_owner_, 0u);
  for (std::size_t l = 0; l < columns_.size(); ++l)
    for (const auto& e : columns_[l].entries())
      if (e.value > row_max_[e.index]) {
        row_max_[e.index] = e.value;
        row_owner_[e.index] = static_cast<std::uint32_t>(l);
      }
  max_stale_ = false;
}

const std::vector<double>& CoefficientMatrix::row_max() const {
  if (max_stale_) settle();
  return row_max_;
}

std::size_t CoefficientMatrix::accounted_bytes() const noexcept {
  return total_nnz_ * sizeof(SparseEntry) + dim() * kAggregateBytesPerRow;
}

bool CoefficientMatrix::is_feasible(double tol) const {
  for (const auto& c : columns_) {
    if (c.empty()) return false;
    for (const auto& e : c.entries())
      if (!(e.value >= 0.0)) return false;
    if (std::abs(c.sum() - 1.0) > tol) return false;
  }
  return true;
}

std::vector<std::size_t> CoefficientMatrix::support_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t n = 0; n < row_nnz_.size(); ++n)
    if (row_nnz_[n] > 0) rows.push_back(n);
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<double> mat_vec(const DenseMatrix& x, const SparseSimplexColumn& c) {
  if (c.dim() != x.cols())
    throw ContractError("mat_vec: column dimension " + std::to_string(c.dim()) +
                        " does not match " + std::to_string(x.cols()) + " columns");
  std::vector<double> out(x.rows(), 0.0);
  for (const auto& e : c.entries()) {
    const auto xi = x.col(e.index);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] += e.value * xi[m];
  }
  return out;
}

std::vector<double> residual_gradient_column(const DenseMatrix& x, const SparseSimplexColumn& c,
                                             std::size_t l) {
  if (l >= x.cols()) throw ContractError("residual_gradient_column: column index out of range");
  std::vector<double> r = mat_vec(x, c);
  const auto xl = x.col(l);
  for (std::size_t m = 0; m < r.size(); ++m) r[m] -= xl[m];
  std::vector<double> p(x.cols());
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = dot(x.col(n), r);
  return p;
}

std::vector<double> row_inf_norms(const CoefficientMatrix& c) { return c.row_max(); }

}  // namespace merit
