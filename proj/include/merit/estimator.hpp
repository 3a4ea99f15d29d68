#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "merit/dense_matrix.hpp"

namespace merit {

struct AnchorSet;

struct SimplexLsConfig {
  std::size_t max_iters = 1000;
  /// Stop once an iteration lowers the objective by less than tol * objective.
  double tol = 1e-10;

  void validate() const;
};

/// argmin over the probability simplex of 0.5 ||D theta - target||^2.
/// Frank-Wolfe vertex iteration on the k x k Gram matrix with exact line
/// search and away steps. Ties resolve to the lowest index.
std::vector<double> simplex_ls(const DenseMatrix& d, std::span<const double> target,
                               const SimplexLsConfig& cfg = {});

/// Same solver for several targets sharing one dictionary; targets are the
/// columns of `targets`. Returns a k x (#targets) matrix.
DenseMatrix simplex_ls_columns(const DenseMatrix& d, const DenseMatrix& targets,
                               const SimplexLsConfig& cfg = {});

/// H estimate with basis X(:, anchors): column l solves simplex_ls for x_l.
DenseMatrix estimate_h(const DenseMatrix& x, const AnchorSet& anchors,
                       const SimplexLsConfig& cfg = {});

}  // namespace merit
