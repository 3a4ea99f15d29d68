#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/estimator.hpp"
#include "merit/spa.hpp"

namespace merit {

struct AnchorSelection {
  AnchorSet anchors;  // ascending
  /// Fewer than k rows were nonzero, so some picks have a zero row norm.
  bool includes_zero_rows = false;
};

/// Indices of the k largest scores (ties: lower index first), ascending.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

/// Rows of C with the k largest l_inf norms.
AnchorSelection select_anchors(const CoefficientMatrix& c, std::size_t k);

/// 1 - alpha * sqrt(k) / 2: lower bound on anchor-row l_inf norms when every
/// column is supported on the anchors and fits its membership within alpha.
double anchor_row_lower_bound(double alpha, std::size_t k);

/// min_k min_{theta in simplex} ||w_k - W(:,-k) theta||_2. For K = 1 this is
/// ||w_1||_2 (no other columns to combine).
double alpha_margin(const DenseMatrix& w, const SimplexLsConfig& cfg = {});

/// Column j of H that equals e_k, for every k (first match). Throws
/// ContractError when some unit vector is missing.
std::vector<std::size_t> find_anchor_columns(const DenseMatrix& h, double tol = 1e-12);

struct TheoryDiagnostics {
  double gamma = 0.0;        // max_k ||w_k||
  double delta_bound = 0.0;  // max_i ||v_i||
  double d_h = 0.0;          // largest anchor-row weight on a non-anchor column
  double alpha_w = 0.0;
  double beta = 0.0;         // +inf when alpha_w = 0 or d_h = 1
  double d_prime_h = 0.0;
};

/// V may be empty (treated as zero noise).
TheoryDiagnostics compute_diagnostics(const DenseMatrix& w, const DenseMatrix& h,
                                      const DenseMatrix& v, double lambda, double mu);

struct RegularityCheck {
  bool regular = false;
  double xi = 0.0;
};

/// Integrality tolerance on t(t+1)/2 * |c_ni - c_nj|.
inline constexpr double kIntegralityTolerance = 1e-9;

/// Whether some anchor row of C_init holds two entries whose scaled gap
/// t(t+1)/2 * |c_ni - c_nj| is not a natural number, and the smallest
/// distance of such a gap to the naturals. Rows are scanned over their
/// distinct explicit values plus one implicit zero when present.
RegularityCheck check_init_regularity(const CoefficientMatrix& init, std::size_t t_init,
                                      const AnchorSet& anchor_rows);

struct SupportMargin {
  double psi = 0.0;  // min nonzero within-row gap over anchor rows
  double upsilon = 0.0;
  double lambda_max_wtw = 0.0;
  bool upsilon_positive = false;
};

/// psi and upsilon of the regularized support-containment condition,
/// evaluated on one iterate. Reported only; nothing is enforced.
SupportMargin support_margin(const CoefficientMatrix& c, const AnchorSet& anchor_rows,
                             const DenseMatrix& w, const DenseMatrix& h, double lambda, double mu);

nlohmann::json to_json(const TheoryDiagnostics& d);
nlohmann::json to_json(const SupportMargin& s);

}  // namespace merit
