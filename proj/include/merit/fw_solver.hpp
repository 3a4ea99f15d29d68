#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/regularizer.hpp"

namespace merit {

inline constexpr std::size_t kDefaultMaxSweeps = 500;

struct SolveConfig {
  double lambda = kDefaultLambda;
  double mu = kDefaultMu;
  std::size_t max_sweeps = kDefaultMaxSweeps;
  /// Step-schedule offset for a warm start; ignored (forced to 0) on a cold start.
  std::size_t t_init = 0;
  /// Freeze a column once ||x_l - X c_l||_2 <= tol. 0 disables freezing.
  double per_column_tol = 0.0;
  std::uint64_t seed = 0;
  bool track_support = false;
  /// Worker threads for column blocks; 0 and 1 both mean serial.
  unsigned threads = 0;

  void validate() const;
};

struct SolveReport {
  std::size_t sweeps_run = 0;
  std::size_t t_init = 0;
  std::vector<double> final_residual_per_column;
  std::size_t peak_nonzero_rows = 0;
  std::size_t peak_total_nnz = 0;
  std::vector<double> objective_trace;
  std::size_t frozen_columns = 0;
  std::size_t support_union_size = 0;
};

struct SolveResult {
  CoefficientMatrix coefficients;
  SolveReport report;
};

struct SweepStats {
  std::size_t stepped = 0;
  std::size_t newly_frozen = 0;
  /// Columns left unchanged because their Frank-Wolfe gap was <= 0.
  std::size_t at_optimum = 0;
};

/// Smallest index attaining the minimum of g.
std::size_t fw_select_vertex(std::span<const double> g);

/// One pass over all non-frozen columns with alpha = 2/(t+2). The softmax
/// state is taken from C at entry and not refreshed while columns move;
/// each column's gradient depends only on that snapshot and on its own
/// entries, so column blocks are processed independently.
SweepStats fw_sweep(const DenseMatrix& x, CoefficientMatrix& c, std::size_t t,
                    const SolveConfig& cfg, std::vector<std::uint8_t>& frozen);

/// Called after every sweep with the sweep's t and the current iterate.
using SweepObserver = std::function<void(std::size_t, const CoefficientMatrix&)>;

/// Runs sweeps t_init .. t_init + max_sweeps - 1, stopping early once every
/// column is frozen. Without `init` the iterate starts at C = 0 and t = 0;
/// an infeasible `init` raises InfeasibleError.
SolveResult solve(const DenseMatrix& x, const SolveConfig& cfg,
                  std::optional<CoefficientMatrix> init = std::nullopt,
                  const SweepObserver& observer = {});

/// ||x_l - X c_l||_2 for every column.
std::vector<double> column_residual_norms(const DenseMatrix& x, const CoefficientMatrix& c);

/// 0.5 ||X - XC||_F^2 + lambda * phi_mu_total(C); the smooth term is skipped when lambda = 0.
double regularized_objective(const DenseMatrix& x, const CoefficientMatrix& c, double lambda,
                             double mu);

}  // namespace merit
