#include "merit/selection.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "merit/error.hpp"
#include "merit/regularizer.hpp"

namespace merit {
namespace {

// Distinct explicit values of each requested row, plus 0 when the row has an
// implicit zero.
std::vector<std::vector<double>> row_values(const CoefficientMatrix& c,
                                            std::span<const std::size_t> rows) {
  const std::size_t n = c.dim();
  std::vector<long> slot(n, -1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= n) throw ContractError("anchor row out of range");
    slot[rows[k]] = static_cast<long>(k);
  }
  std::vector<std::vector<double>> values(rows.size());
  for (const auto& col : c.columns())
    for (const auto& e : col.entries())
      if (slot[e.index] >= 0) values[static_cast<std::size_t>(slot[e.index])].push_back(e.value);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto& v = values[k];
    if (c.row_nnz()[rows[k]] < n) v.push_back(0.0);
    std::ranges::sort(v);
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return values;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw ContractError("top_k_indices: k exceeds the number of scores");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::ranges::sort(order);
  return order;
}

AnchorSelection select_anchors(const CoefficientMatrix& c, std::size_t k) {
  const auto& norms = c.row_max();
  AnchorSelection out;
  out.anchors.indices = top_k_indices(norms, k);
  out.includes_zero_rows =
      std::ranges::any_of(out.anchors.indices, [&](std::size_t i) { return norms[i] <= 0.0; });
  return out;
}

double anchor_row_lower_bound(double alpha, std::size_t k) {
  if (!(alpha >= 0.0)) throw ContractError("anchor_row_lower_bound: alpha must be >= 0");
  return 1.0 - alpha * std::sqrt(static_cast<double>(k)) / 2.0;
}

double alpha_margin(const DenseMatrix& w, const SimplexLsConfig& cfg) {
  const std::size_t k = w.cols();
  if (k == 0) throw ContractError("alpha_margin: W has no columns");
  if (k == 1) return norm2(w.col(0));
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> others;
  for (std::size_t drop = 0; drop < k; ++drop) {
    others.clear();
    for (std::size_t j = 0; j < k; ++j)
      if (j != drop) others.push_back(j);
    const DenseMatrix dict = w.select_cols(others);
    const auto theta = simplex_ls(dict, w.col(drop), cfg);
    std::vector<double> r(w.col(drop).begin(), w.col(drop).end());
    for (std::size_t j = 0; j < others.size(); ++j) {
      const auto dj = dict.col(j);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= theta[j] * dj[i];
    }
    best = std::min(best, norm2(r));
  }
  return best;
}

std::vector<std::size_t> find_anchor_columns(const DenseMatrix& h, double tol) {
  const std::size_t k = h.rows();
  std::vector<std::size_t> found(k, h.cols());
  for (std::size_t j = 0; j < h.cols(); ++j) {
    const auto col = h.col(j);
    const auto peak = static_cast<std::size_t>(std::ranges::max_element(col) - col.begin());
    if (found[peak] != h.cols() || std::abs(col[peak] - 1.0) > tol) continue;
    bool unit = true;
    for (std::size_t i = 0; i < k && unit; ++i)
      if (i != peak && std::abs(col[i]) > tol) unit = false;
    if (unit) found[peak] = j;
  }
  for (std::size_t i = 0; i < k; ++i)
    if (found[i] == h.cols())
      throw ContractError("H has no unit column for row " + std::to_string(i));
  return found;
}

TheoryDiagnostics compute_diagnostics(const DenseMatrix& w, const DenseMatrix& h,
                                      const DenseMatrix& v, double lambda, double mu) {
  SmoothingParams{mu, lambda}.validate();
  const std::size_t k = w.cols();
  const std::size_t n = h.cols();
  if (h.rows() != k) throw ContractError("compute_diagnostics: H must have K rows");
  if (!v.empty() && (v.rows() != w.rows() || v.cols() != n))
    throw ContractError("compute_diagnostics: V must be M x N");

  TheoryDiagnostics d;
  for (std::size_t j = 0; j < k; ++j) d.gamma = std::max(d.gamma, norm2(w.col(j)));

  double v_fro_sq = 0.0;
  for (std::size_t i = 0; !v.empty() && i < n; ++i) {
    const double sq = dot(v.col(i), v.col(i));
    v_fro_sq += sq;
    d.delta_bound = std::max(d.delta_bound, std::sqrt(sq));
  }

  const auto anchors = find_anchor_columns(h);
  std::vector<std::uint8_t> is_anchor(n, 0);
  for (std::size_t j : anchors) is_anchor[j] = 1;
  for (std::size_t l = 0; l < n; ++l)
    if (!is_anchor[l])
      for (std::size_t r = 0; r < k; ++r) d.d_h = std::max(d.d_h, h(r, l));
  d.d_h = std::clamp(d.d_h, 0.0, 1.0);

  d.alpha_w = alpha_margin(w);

  // rho at its smallest admissible value N max_i ||v_i||^2 / ||V||_F^2, so
  // 4 rho (1 - K/N) ||V||_F^2 = 4 (N - K) delta^2.
  const double noise_term =
      v_fro_sq > 0.0 ? 4.0 * static_cast<double>(n - std::min(n, k)) * d.delta_bound * d.delta_bound
                     : 0.0;
  const double numer = std::sqrt(noise_term + 2.0 * lambda * static_cast<double>(k)) + 2.0 * d.delta_bound;
  const double denom = d.alpha_w * (1.0 - d.d_h);
  d.beta = denom > 0.0 ? numer / denom : std::numeric_limits<double>::infinity();

  const double kk = static_cast<double>(k);
  const double a = 2.0 * (d.d_h - 0.5) * (d.d_h - 0.5) + 0.5;
  const double b = 2.0 * (0.5 - 1.0 / kk) * (0.5 - 1.0 / kk) + 0.5;
  d.d_prime_h = std::sqrt(std::max(a, b));
  return d;
}

RegularityCheck check_init_regularity(const CoefficientMatrix& init, std::size_t t_init,
                                      const AnchorSet& anchor_rows) {
  if (t_init < 1) throw ContractError("check_init_regularity: t_init must be >= 1");
  const double scale = static_cast<double>(t_init) * static_cast<double>(t_init + 1) / 2.0;
  RegularityCheck out;
  double xi = std::numeric_limits<double>::infinity();
  for (const auto& vals : row_values(init, anchor_rows.indices)) {
    for (std::size_t a = 0; a < vals.size(); ++a)
      for (std::size_t b = a + 1; b < vals.size(); ++b) {
        const double gap = scale * (vals[b] - vals[a]);
        const double dist = std::abs(gap - std::round(gap));
        if (dist > kIntegralityTolerance) xi = std::min(xi, dist);
      }
  }
  if (std::isfinite(xi)) {
    out.regular = true;
    out.xi = xi;
  }
  return out;
}

SupportMargin support_margin(const CoefficientMatrix& c, const AnchorSet& anchor_rows,
                             const DenseMatrix& w, const DenseMatrix& h, double lambda, double mu) {
  SmoothingParams{mu, lambda}.validate();
  SupportMargin s;
  double psi = std::numeric_limits<double>::infinity();
  for (const auto& vals : row_values(c, anchor_rows.indices))
    for (std::size_t a = 1; a < vals.size(); ++a) psi = std::min(psi, vals[a] - vals[a - 1]);
  s.psi = std::isfinite(psi) ? psi : 0.0;

  Eigen::Map<const Eigen::MatrixXd> wm(w.data().data(), static_cast<Eigen::Index>(w.rows()),
                                       static_cast<Eigen::Index>(w.cols()));
  const Eigen::MatrixXd gram = wm.transpose() * wm;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  s.lambda_max_wtw = eig.eigenvalues().maxCoeff();

  const double dp = compute_diagnostics(w, h, DenseMatrix(), lambda, mu).d_prime_h;
  const double n = static_cast<double>(c.dim());
  s.upsilon = 0.25 * (lambda / n - lambda * std::exp(-s.psi / mu) -
                      (dp * dp + 2.0 * dp + 5.0) * s.lambda_max_wtw / 2.0);
  s.upsilon_positive = s.upsilon > 0.0;
  return s;
}

nlohmann::json to_json(const TheoryDiagnostics& d) {
  return {{"gamma", d.gamma},         {"deltaBound", d.delta_bound}, {"dH", d.d_h},
          {"alphaW", d.alpha_w},      {"beta", finite_or_null(d.beta)},
          {"dPrimeH", d.d_prime_h}};
}

nlohmann::json to_json(const SupportMargin& s) {
  return {{"psi", s.psi},
          {"upsilon", s.upsilon},
          {"lambdaMaxWtW", s.lambda_max_wtw},
          {"upsilonPositive", s.upsilon_positive}};
}

}  // namespace merit
