#pragma once

#include <cstddef>
#include <vector>

#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/estimator.hpp"

namespace merit {

/// Distinct column indices of X believed to be anchors (pure columns).
struct AnchorSet {
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  /// Order-insensitive comparison.
  bool same_set(const AnchorSet& other) const;
  friend bool operator==(const AnchorSet&, const AnchorSet&) = default;
};

struct SpaResult {
  AnchorSet anchors;  // selection order
  /// Residual became numerically zero before k picks.
  bool rank_deficient = false;
};

/// Successive projection: pick the residual column of largest norm (lowest
/// index on ties), project every column onto the orthogonal complement of
/// that direction, repeat k times.
SpaResult spa_select(const DenseMatrix& x, std::size_t k);

/// C_init with rows `anchors` holding the simplex least-squares fit of X on
/// X(:, anchors) and zeros elsewhere.
CoefficientMatrix build_warm_start(const DenseMatrix& x, const AnchorSet& anchors,
                                   const SimplexLsConfig& cfg = {});

/// round(1 / RMSE_init) with RMSE_init = sqrt(||X - X C_init||_F^2 / N),
/// clamped to [1, kMaxWarmStartOffset].
std::size_t warm_start_offset(const DenseMatrix& x, const CoefficientMatrix& init);
inline constexpr std::size_t kMaxWarmStartOffset = 1'000'000;

}  // namespace merit
