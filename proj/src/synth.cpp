#include "merit/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "merit/error.hpp"
#include "merit/estimator.hpp"
#include "merit/rng.hpp"
#include "merit/selection.hpp"

namespace merit {

SyntheticInstance generate(std::size_t m, std::size_t k, std::size_t n, double snr_db,
                           std::uint64_t seed) {
  if (k < 1 || k > std::min(m, n) || n <= k)
    throw ContractError("generate: need 1 <= K <= min(M, N) and N > K");

  SyntheticInstance inst;
  inst.seed = seed;
  inst.snr_db = snr_db;

  auto w_rng = CounterRng::stream(seed, 0);
  inst.w = DenseMatrix(m, k);
  for (double& v : inst.w.data()) v = w_rng.uniform();

  auto h_rng = CounterRng::stream(seed, 1);
  DenseMatrix h(k, n);
  for (std::size_t j = 0; j < k; ++j) h(j, j) = 1.0;
  for (std::size_t j = k; j < n; ++j) {
    auto col = h.col(j);
    double total = 0.0;
    for (double& v : col) total += (v = h_rng.exponential());
    for (double& v : col) v /= total;
  }

  // Y = W H
  DenseMatrix y(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t r = 0; r < k; ++r) {
      const double hr = h(r, j);
      if (hr == 0.0) continue;
      const auto wr = inst.w.col(r);
      auto yj = y.col(j);
      for (std::size_t i = 0; i < m; ++i) yj[i] += hr * wr[i];
    }

  DenseMatrix v(m, n);
  if (std::isfinite(snr_db)) {
    double signal = 0.0;
    for (double e : y.data()) signal += e * e;
    inst.sigma = std::sqrt(signal / (static_cast<double>(m * n) * std::pow(10.0, snr_db / 10.0)));
    auto v_rng = CounterRng::stream(seed, 2);
    for (double& e : v.data()) e = inst.sigma * v_rng.normal();
  } else if (snr_db < 0.0) {
    throw ContractError("generate: SNR of -inf is not meaningful");
  }

  // Fisher-Yates: position p receives original column perm[p].
  auto p_rng = CounterRng::stream(seed, 3);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[p_rng.below(i + 1)]);

  inst.x = DenseMatrix(m, n);
  inst.h = DenseMatrix(k, n);
  inst.v = DenseMatrix(m, n);
  inst.anchors.indices.assign(k, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t src = perm[p];
    for (std::size_t i = 0; i < m; ++i) {
      inst.v(i, p) = v(i, src);
      inst.x(i, p) = y(i, src) + v(i, src);
    }
    std::ranges::copy(h.col(src), inst.h.col(p).begin());
    if (src < k) inst.anchors.indices[src] = p;
  }
  return inst;
}

double realized_snr_db(const SyntheticInstance& inst) {
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < inst.x.data().size(); ++i) {
    const double s = inst.x.data()[i] - inst.v.data()[i];
    signal += s * s;
    noise += inst.v.data()[i] * inst.v.data()[i];
  }
  return noise > 0.0 ? 10.0 * std::log10(signal / noise) : kNoiseless;
}

std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Merit: return "merit";
    case SolverKind::Merit0: return "merit0";
    case SolverKind::Spa: return "spa";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& s) {
  if (s == "merit") return SolverKind::Merit;
  if (s == "merit0") return SolverKind::Merit0;
  if (s == "spa") return SolverKind::Spa;
  throw ContractError("unknown solver '" + s + "' (expected merit, merit0 or spa)");
}

namespace {

double relative_fit(const DenseMatrix& x, const CoefficientMatrix& c) {
  double sq = 0.0;
  for (double r : column_residual_norms(x, c)) sq += r * r;
  const double xn = x.frobenius_norm();
  return xn > 0.0 ? std::sqrt(sq) / xn : std::sqrt(sq);
}

}  // namespace

TrialOutcome run_trial(const SyntheticInstance& inst, const TrialConfig& cfg) {
  TrialOutcome out;
  const auto started = std::chrono::steady_clock::now();
  const std::size_t k = inst.anchors.size();
  try {
    if (cfg.solver == SolverKind::Spa) {
      const auto spa = spa_select(inst.x, k);
      out.recovered = spa.anchors;
      const auto c = build_warm_start(inst.x, spa.anchors);
      out.residual = relative_fit(inst.x, c);
      out.peak_nonzero_rows = c.nonzero_rows();
      out.peak_total_nnz = c.total_nnz();
    } else {
      SolveConfig sc = cfg.solve;
      sc.track_support = true;
      if (cfg.solver == SolverKind::Merit0) sc.lambda = 0.0;
      std::optional<CoefficientMatrix> init;
      if (cfg.warm_start == WarmStartKind::Spa) {
        init = build_warm_start(inst.x, spa_select(inst.x, k).anchors);
        sc.t_init = warm_start_offset(inst.x, *init);
      }
      auto result = solve(inst.x, sc, std::move(init));
      out.recovered = select_anchors(result.coefficients, k).anchors;
      out.residual = relative_fit(inst.x, result.coefficients);
      out.peak_nonzero_rows = result.report.peak_nonzero_rows;
      out.peak_total_nnz = result.report.peak_total_nnz;
    }
    out.success = out.recovered.same_set(inst.anchors);
  } catch (const std::exception& e) {
    out.error = e.what();
    out.success = false;
  }
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

double success_rate(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) throw ContractError("success_rate: no outcomes");
  const auto hits = std::ranges::count_if(outcomes, [](const TrialOutcome& o) { return o.success; });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

namespace {

std::vector<double> average_ranks(std::span<const double> a) {
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
  std::vector<double> ranks(a.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && a[order[j + 1]] == a[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

bool is_constant(std::span<const double> a) {
  return std::ranges::all_of(a, [&](double v) { return v == a.front(); });
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ContractError("spearman: length mismatch");
  if (is_constant(a) || is_constant(b)) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = 0.5 * static_cast<double>(a.size() + 1);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean, db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}

SrcResult spearman_src(const DenseMatrix& hhat, const DenseMatrix& href) {
  if (hhat.rows() != href.rows() || hhat.cols() != href.cols())
    throw ContractError("spearman_src: shape mismatch");
  const std::size_t k = hhat.rows();
  if (k == 0) throw ContractError("spearman_src: no rows");
  const DenseMatrix a = hhat.transposed();  // rows as contiguous columns
  const DenseMatrix b = href.transposed();
  SrcResult out;
  std::vector<double> score(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    if (is_constant(a.col(i))) ++out.constant_rows;
    for (std::size_t j = 0; j < k; ++j) score[i * k + j] = spearman(a.col(i), b.col(j));
  }

  std::vector<std::size_t> match(k);
  std::iota(match.begin(), match.end(), 0);
  if (k <= 6) {
    std::vector<std::size_t> perm = match;
    double best = -std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += score[i * k + perm[i]];
      if (s > best) {
        best = s;
        match = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<std::uint8_t> used_a(k, 0), used_b(k, 0);
    for (std::size_t round = 0; round < k; ++round) {
      std::size_t bi = k, bj = k;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (!used_a[i] && !used_b[j] && (bi == k || score[i * k + j] > score[bi * k + bj])) {
            bi = i;
            bj = j;
          }
      match[bi] = bj;
      used_a[bi] = used_b[bj] = 1;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += score[i * k + match[i]];
  out.value = total / static_cast<double>(k);
  out.match = std::move(match);
  return out;
}

MemorySummary memory_report(const SolveReport& report, std::size_t k, std::size_t n, double bound) {
  if (k == 0 || n == 0) throw ContractError("memory_report: K and N must be positive");
  MemorySummary s;
  s.peak_total_nnz = report.peak_total_nnz;
  s.peak_nonzero_rows = report.peak_nonzero_rows;
  s.ratio = static_cast<double>(report.peak_total_nnz) / (static_cast<double>(k) * static_cast<double>(n));
  s.linear = s.ratio <= bound;
  return s;
}

std::vector<TrialRecord> run_sweep(const SweepSpec& spec,
                                   const std::function<void(const TrialRecord&)>& on_record) {
  if (spec.trials < 1) throw ContractError("run_sweep: trials must be >= 1");
  std::vector<TrialRecord> records;
  for (const auto& point : spec.grid)
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const std::uint64_t seed = derive_seed(spec.seed, t);
      const auto inst = generate(point.m, point.k, point.n, point.snr_db, seed);
      for (SolverKind solver : spec.solvers) {
        TrialConfig tc{solver, spec.solve, spec.warm_start};
        TrialRecord rec{seed, point, solver, run_trial(inst, tc)};
        if (!spec.record_timing) rec.outcome.wall_time_s = 0.0;
        if (on_record) on_record(rec);
        records.push_back(std::move(rec));
      }
    }
  return records;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
  std::vector<AggregateRow> rows;
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, double, int>;
  std::map<Key, std::size_t> slot;
  std::vector<std::size_t> hits;
  for (const auto& r : records) {
    const Key key{r.point.m, r.point.k, r.point.n, r.point.snr_db, static_cast<int>(r.solver)};
    auto [it, fresh] = slot.try_emplace(key, rows.size());
    if (fresh) {
      rows.push_back(AggregateRow{r.point, r.solver});
      hits.push_back(0);
    }
    auto& row = rows[it->second];
    ++row.trials;
    if (r.outcome.success) ++hits[it->second];
    row.mean_peak_total_nnz += static_cast<double>(r.outcome.peak_total_nnz);
    row.mean_peak_nnz_ratio += static_cast<double>(r.outcome.peak_total_nnz) /
                               (static_cast<double>(r.point.k) * static_cast<double>(r.point.n));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = static_cast<double>(rows[i].trials);
    rows[i].success_rate = static_cast<double>(hits[i]) / t;
    rows[i].mean_peak_total_nnz /= t;
    rows[i].mean_peak_nnz_ratio /= t;
  }
  return rows;
}

nlohmann::json to_json(const TrialRecord& r, bool include_timing) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["snrDb"] = std::isfinite(r.point.snr_db) ? nlohmann::json(r.point.snr_db) : nlohmann::json(nullptr);
  j["M"] = r.point.m;
  j["K"] = r.point.k;
  j["N"] = r.point.n;
  j["solver"] = to_string(r.solver);
  j["success"] = r.outcome.success;
  j["residual"] = r.outcome.residual;
  j["peakNonzeroRows"] = r.outcome.peak_nonzero_rows;
  j["peakTotalNnz"] = r.outcome.peak_total_nnz;
  j["wallTimeMs"] = include_timing ? std::round(r.outcome.wall_time_s * 1e6) / 1e3 : 0.0;
  if (r.outcome.error) j["error"] = *r.outcome.error;
  return j;
}

std::string to_jsonl(const std::vector<TrialRecord>& records, bool include_timing) {
  std::ostringstream os;
  for (const auto& r : records) os << to_json(r, include_timing).dump() << '\n';
  return os.str();
}

CommunityResult community_pipeline(const SymmetricMatrix& adjacency, const DenseMatrix& h_ref,
                                   std::size_t k, const SolveConfig& cfg, double energy_fraction) {
  if (h_ref.rows() != k || h_ref.cols() != adjacency.size())
    throw ContractError("community_pipeline: ground truth must be K x n");
  CommunityResult out;
  out.k = k;
  out.nodes_kept = energy_filter(adjacency, energy_fraction);
  if (out.nodes_kept.size() < k) throw ContractError("community_pipeline: fewer kept nodes than K");
  const auto sub = adjacency.principal_submatrix(out.nodes_kept);
  const auto eig = top_eigenpairs(sub, k);
  out.eigen_converged = eig.converged;
  const DenseMatrix x = eig.vectors.transposed();
  const auto solved = solve(x, cfg);
  const auto picked = select_anchors(solved.coefficients, k).anchors;
  const DenseMatrix hhat = estimate_h(x, picked);
  out.src = spearman_src(hhat, h_ref.select_cols(out.nodes_kept)).value;
  for (std::size_t i : picked.indices) out.anchors.indices.push_back(out.nodes_kept[i]);
  return out;
}

}  // namespace merit
