#include "merit/spa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "merit/error.hpp"
#include "merit/fw_solver.hpp"

namespace merit {

bool AnchorSet::same_set(const AnchorSet& other) const {
  auto a = indices;
  auto b = other.indices;
  std::ranges::sort(a);
  std::ranges::sort(b);
  return a == b;
}

SpaResult spa_select(const DenseMatrix& x, std::size_t k) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (k > std::min(m, n)) throw ContractError("spa_select: k exceeds min(M, N)");
  DenseMatrix r = x;
  std::vector<double> sq(n);
  for (std::size_t j = 0; j < n; ++j) sq[j] = dot(r.col(j), r.col(j));
  const double scale = sq.empty() ? 0.0 : *std::ranges::max_element(sq);
  if (!(scale > 0.0)) throw ContractError("spa_select: X is zero");
  // Residual energy below this is rounding noise.
  const double floor = scale * 1e-24;

  SpaResult out;
  std::vector<double> u(m);
  for (std::size_t pick = 0; pick < k; ++pick) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (sq[j] > sq[best]) best = j;
    if (sq[best] <= floor) {
      out.rank_deficient = true;
      break;
    }
    out.anchors.indices.push_back(best);
    const auto rb = r.col(best);
    const double len = norm2(rb);
    for (std::size_t i = 0; i < m; ++i) u[i] = rb[i] / len;
    for (std::size_t j = 0; j < n; ++j) {
      auto rj = r.col(j);
      const double proj = dot(u, rj);
      for (std::size_t i = 0; i < m; ++i) rj[i] -= proj * u[i];
      sq[j] = dot(rj, rj);
    }
  }
  return out;
}

CoefficientMatrix build_warm_start(const DenseMatrix& x, const AnchorSet& anchors,
                                   const SimplexLsConfig& cfg) {
  if (anchors.indices.empty()) throw ContractError("build_warm_start: anchor set is empty");
  const std::size_t n = x.cols();
  // Sort anchors so each column's entries come out in index order.
  std::vector<std::size_t> order(anchors.indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::ranges::sort(order, {}, [&](std::size_t i) { return anchors.indices[i]; });
  const DenseMatrix h = estimate_h(x, anchors, cfg);
  std::vector<SparseSimplexColumn> cols;
  cols.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<SparseEntry> entries;
    double total = 0.0;
    for (std::size_t i : order)
      if (h(i, l) > kPurgeThreshold) {
        entries.push_back({static_cast<std::uint32_t>(anchors.indices[i]), h(i, l)});
        total += h(i, l);
      }
    for (auto& e : entries) e.value /= total;
    cols.push_back(SparseSimplexColumn::from_entries(n, std::move(entries)));
  }
  return CoefficientMatrix::from_columns(std::move(cols));
}

std::size_t warm_start_offset(const DenseMatrix& x, const CoefficientMatrix& init) {
  double sq = 0.0;
  for (double r : column_residual_norms(x, init)) sq += r * r;
  const double rmse = std::sqrt(sq / static_cast<double>(x.cols()));
  if (!(rmse > 0.0)) return kMaxWarmStartOffset;
  const double t = std::round(1.0 / rmse);
  if (t < 1.0) return 1;
  if (t > static_cast<double>(kMaxWarmStartOffset)) return kMaxWarmStartOffset;
  return static_cast<std::size_t>(t);
}

}  // namespace merit
