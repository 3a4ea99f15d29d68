#include "merit/regularizer.hpp"

#include <algorithm>
#include <cmath>

#include "merit/error.hpp"

namespace merit {

void SmoothingParams::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ContractError("mu must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("lambda must be >= 0");
}

double phi_mu_row(std::span<const double> x, double mu) {
  if (x.empty()) throw ContractError("phi_mu_row: empty vector");
  if (!(mu > 0.0)) throw ContractError("phi_mu_row: mu must be positive");
  const double m = *std::ranges::max_element(x);
  double s = 0.0;
  for (double v : x) s += std::exp((v - m) / mu);
  return m + mu * (std::log(s) - std::log(static_cast<double>(x.size())));
}

namespace {

// Accumulates sum over explicit entries of exp((c - m_n)/mu) per row.
std::vector<double> explicit_exp_sums(const CoefficientMatrix& c, std::span<const double> shift,
                                      double mu) {
  std::vector<double> sums(c.dim(), 0.0);
  for (const auto& col : c.columns())
    for (const auto& e : col.entries()) sums[e.index] += std::exp((e.value - shift[e.index]) / mu);
  return sums;
}

}  // namespace

double phi_mu_total(const CoefficientMatrix& c, double mu) {
  if (!(mu > 0.0)) throw ContractError("phi_mu_total: mu must be positive");
  const std::size_t n = c.dim();
  if (n == 0) return 0.0;
  const auto& shift = c.row_max();
  const auto sums = explicit_exp_sums(c, shift, mu);
  const auto& nnz = c.row_nnz();
  const double log_n = std::log(static_cast<double>(n));
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double zeros = static_cast<double>(n - nnz[r]);
    const double s = sums[r] + zeros * std::exp(-shift[r] / mu);
    total += shift[r] + mu * (std::log(s) - log_n);
  }
  return total;
}

RowSoftmaxState RowSoftmaxState::build(const CoefficientMatrix& c, double mu) {
  if (!(mu > 0.0)) throw ContractError("RowSoftmaxState: mu must be positive");
  RowSoftmaxState st;
  st.mu_ = mu;
  const std::size_t n = c.dim();
  st.shift_ = c.row_max();
  st.shifted_sum_ = explicit_exp_sums(c, st.shift_, mu);
  st.implicit_weight_.resize(n);
  const auto& nnz = c.row_nnz();
  for (std::size_t r = 0; r < n; ++r) {
    const double z = std::exp(-st.shift_[r] / mu);
    st.shifted_sum_[r] += static_cast<double>(n - nnz[r]) * z;
    st.implicit_weight_[r] = z / st.shifted_sum_[r];
  }
  return st;
}

std::vector<double> softmax_gradient_column(const CoefficientMatrix& c,
                                            const RowSoftmaxState& state, std::size_t l) {
  if (l >= c.dim()) throw ContractError("softmax_gradient_column: column index out of range");
  const auto w = state.implicit_weight();
  std::vector<double> y(w.begin(), w.end());
  const auto shift = state.row_shift();
  const auto sum = state.row_shifted_sum();
  for (const auto& e : c.column(l).entries())
    y[e.index] = std::exp((e.value - shift[e.index]) / state.mu()) / sum[e.index];
  return y;
}

double rowinf_norm_sum(const CoefficientMatrix& c) {
  double s = 0.0;
  for (double v : c.row_max()) s += v;
  return s;
}

}  // namespace merit
