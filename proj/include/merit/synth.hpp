#pragma once

// Synthetic separable instances, trial harness and evaluation metrics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/embed.hpp"
#include "merit/fw_solver.hpp"
#include "merit/spa.hpp"

namespace merit {

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct SyntheticInstance {
  DenseMatrix x;  // M x N, columns permuted
  DenseMatrix w;  // M x K
  DenseMatrix h;  // K x N, permuted alongside X
  DenseMatrix v;  // M x N noise, permuted alongside X
  /// anchors.indices[k] is the column of X generated from w_k.
  AnchorSet anchors;
  double snr_db = kNoiseless;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// X = W H + V with W ~ U(0,1), H = [I_K, Dirichlet(1_K) columns], i.i.d.
/// Gaussian V scaled to the requested SNR (kNoiseless for V = 0), columns
/// shuffled. Streams 0..3 of `seed` drive W, H, V and the permutation.
SyntheticInstance generate(std::size_t m, std::size_t k, std::size_t n, double snr_db,
                           std::uint64_t seed);

/// 10 log10(sum_l ||W h_l||^2 / ||V||_F^2) measured on an instance.
double realized_snr_db(const SyntheticInstance& inst);

enum class SolverKind { Merit, Merit0, Spa };
std::string to_string(SolverKind s);
SolverKind parse_solver(const std::string& s);

enum class WarmStartKind { Zero, Spa };

struct TrialConfig {
  SolverKind solver = SolverKind::Merit;
  SolveConfig solve;  // lambda is ignored (forced to 0) for Merit0
  WarmStartKind warm_start = WarmStartKind::Zero;
};

struct TrialOutcome {
  AnchorSet recovered;
  bool success = false;
  /// ||X - X C||_F / ||X||_F of the final representation.
  double residual = 0.0;
  std::size_t peak_nonzero_rows = 0;
  std::size_t peak_total_nnz = 0;
  double wall_time_s = 0.0;
  std::optional<std::string> error;
};

TrialOutcome run_trial(const SyntheticInstance& inst, const TrialConfig& cfg);

/// Fraction of outcomes with success set. Throws on an empty sequence.
double success_rate(std::span<const TrialOutcome> outcomes);

struct SrcResult {
  double value = 0.0;
  /// match[i] = row of Href paired with row i of Hhat.
  std::vector<std::size_t> match;
  std::size_t constant_rows = 0;
};

/// Spearman rank correlation per row (average ranks for ties), averaged over
/// the K rows after pairing Hhat rows with Href rows: exhaustive search for
/// K <= 6, greedy largest-first otherwise. A constant row scores 0.
SrcResult spearman_src(const DenseMatrix& hhat, const DenseMatrix& href);

/// Spearman correlation of two equally long sequences.
double spearman(std::span<const double> a, std::span<const double> b);

struct MemorySummary {
  std::size_t peak_total_nnz = 0;
  std::size_t peak_nonzero_rows = 0;
  double ratio = 0.0;  // peak_total_nnz / (K N)
  bool linear = true;  // ratio <= bound
};

MemorySummary memory_report(const SolveReport& report, std::size_t k, std::size_t n,
                            double bound = 2.0);

// ---------------------------------------------------------------------------
// Sweeps

struct GridPoint {
  std::size_t m, k, n;
  double snr_db;
};

struct SweepSpec {
  std::vector<GridPoint> grid;
  std::vector<SolverKind> solvers;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  SolveConfig solve;
  WarmStartKind warm_start = WarmStartKind::Zero;
  /// Zero the wallTimeMs field so reruns compare byte for byte.
  bool record_timing = true;
};

struct TrialRecord {
  std::uint64_t seed;
  GridPoint point;
  SolverKind solver;
  TrialOutcome outcome;
};

struct AggregateRow {
  GridPoint point;
  SolverKind solver;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_peak_total_nnz = 0.0;
  double mean_peak_nnz_ratio = 0.0;
};

/// Trial t of every grid point uses instance seed derive_seed(spec.seed, t),
/// so solvers and SNR levels see common random instances.
std::vector<TrialRecord> run_sweep(const SweepSpec& spec,
                                   const std::function<void(const TrialRecord&)>& on_record = {});
std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

nlohmann::json to_json(const TrialRecord& r, bool include_timing = true);
std::string to_jsonl(const std::vector<TrialRecord>& records, bool include_timing = true);

// ---------------------------------------------------------------------------
// Community detection on an adjacency matrix

struct CommunityResult {
  double src = 0.0;
  std::size_t k = 0;
  std::vector<std::size_t> nodes_kept;
  AnchorSet anchors;  // positions in the original node numbering
  bool eigen_converged = true;
};

/// energy filter -> top-k eigenvectors (rows become X) -> solve ->
/// select anchors -> simplex least squares H -> SRC against `h_ref`
/// restricted to the kept nodes.
CommunityResult community_pipeline(const SymmetricMatrix& adjacency, const DenseMatrix& h_ref,
                                   std::size_t k, const SolveConfig& cfg,
                                   double energy_fraction = 0.99);

}  // namespace merit
