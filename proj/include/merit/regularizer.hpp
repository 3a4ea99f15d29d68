#pragma once

// Log-sum-exp smoothing of the row-wise l_inf,1 norm. Every exponent is
// shifted by its row maximum, so arguments never exceed zero; with the
// default temperature of 1e-5 the unshifted form overflows immediately.

#include <cstddef>
#include <span>
#include <vector>

#include "merit/coefficient_matrix.hpp"

namespace merit {

inline constexpr double kDefaultLambda = 1e-6;
inline constexpr double kDefaultMu = 1e-5;

struct SmoothingParams {
  double mu = kDefaultMu;
  double lambda = kDefaultLambda;

  /// Throws ContractError unless mu > 0 and lambda >= 0.
  void validate() const;
};

/// mu * log((1/N) sum_i exp(x_i / mu)) for nonnegative x, evaluated in
/// shifted form. Lies in [max(x) - mu log N, max(x)].
double phi_mu_row(std::span<const double> x, double mu);

/// Sum of phi_mu_row over all N rows of C (implicit zeros included), in
/// O(nnz + N).
double phi_mu_total(const CoefficientMatrix& c, double mu);

/// Per-row shift and shifted exponential sum, taken once per sweep.
class RowSoftmaxState {
 public:
  static RowSoftmaxState build(const CoefficientMatrix& c, double mu);

  std::span<const double> row_shift() const noexcept { return shift_; }
  std::span<const double> row_shifted_sum() const noexcept { return shifted_sum_; }
  /// Softmax weight an implicit zero of row n receives: exp(-m_n/mu) / S_n.
  std::span<const double> implicit_weight() const noexcept { return implicit_weight_; }
  double mu() const noexcept { return mu_; }

 private:
  double mu_ = 0.0;
  std::vector<double> shift_;
  std::vector<double> shifted_sum_;
  std::vector<double> implicit_weight_;
};

/// Column l of the gradient of phi_mu_total: y_n = exp((C(n,l) - m_n)/mu) / S_n.
std::vector<double> softmax_gradient_column(const CoefficientMatrix& c,
                                            const RowSoftmaxState& state, std::size_t l);

/// Exact sum_n ||C(n,:)||_inf.
double rowinf_norm_sum(const CoefficientMatrix& c);

}  // namespace merit
