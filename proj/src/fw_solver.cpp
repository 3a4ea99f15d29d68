#include "merit/fw_solver.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "merit/error.hpp"

namespace merit {
namespace {

// Columns per gradient block. Fixed so results do not depend on thread count.
constexpr std::size_t kBlock = 64;

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

struct BlockContext {
  const DenseMatrix& x;
  CoefficientMatrix& c;
  const SolveConfig& cfg;
  const std::optional<RowSoftmaxState>& softmax;
  std::vector<std::uint8_t>& frozen;
  double alpha;
  bool synced;
};

class BlockWorker {
 public:
  explicit BlockWorker(std::size_t m) : m_(m) {}

  SweepStats run(BlockContext& ctx, std::size_t begin, std::size_t end) {
    SweepStats stats;
    const DenseMatrix& x = ctx.x;
    const std::size_t n = x.cols();
    active_.clear();
    for (std::size_t l = begin; l < end; ++l)
      if (!ctx.frozen[l]) active_.push_back(l);
    if (active_.empty()) return stats;

    // R = X C_B - X_B, then P = X^T R: the N x N Gram matrix is never formed.
    residual_.setZero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(active_.size()));
    for (std::size_t b = 0; b < active_.size(); ++b) {
      const std::size_t l = active_[b];
      double* r = residual_.col(static_cast<Eigen::Index>(b)).data();
      for (const auto& e : ctx.c.column(l).entries()) {
        const auto xi = x.col(e.index);
        for (std::size_t k = 0; k < m_; ++k) r[k] += e.value * xi[k];
      }
      const auto xl = x.col(l);
      for (std::size_t k = 0; k < m_; ++k) r[k] -= xl[k];
    }
    ConstMap xmap(x.data().data(), static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n));
    grad_.noalias() = xmap.transpose() * residual_;

    const double lambda = ctx.cfg.lambda;
    for (std::size_t b = 0; b < active_.size(); ++b) {
      const std::size_t l = active_[b];
      const auto& col = ctx.c.column(l);
      if (ctx.cfg.per_column_tol > 0.0 &&
          residual_.col(static_cast<Eigen::Index>(b)).norm() <= ctx.cfg.per_column_tol) {
        ctx.frozen[l] = 1;
        ++stats.newly_frozen;
        continue;
      }
      double* g = grad_.col(static_cast<Eigen::Index>(b)).data();
      if (lambda > 0.0) {
        const auto& sm = *ctx.softmax;
        const auto w = sm.implicit_weight();
        const auto shift = sm.row_shift();
        const auto sum = sm.row_shifted_sum();
        for (std::size_t i = 0; i < n; ++i) g[i] += lambda * w[i];
        for (const auto& e : col.entries()) {
          const double y = std::exp((e.value - shift[e.index]) / sm.mu()) / sum[e.index];
          g[e.index] += lambda * (y - w[e.index]);
        }
      }
      std::span<const double> gs(g, n);
      const std::size_t j = fw_select_vertex(gs);
      if (!std::isfinite(gs[j]) || std::ranges::any_of(gs, [](double v) { return !std::isfinite(v); }))
        throw NumericalError("non-finite gradient in column " + std::to_string(l));
      if (!col.empty()) {
        double gap = -gs[j];
        for (const auto& e : col.entries()) gap += e.value * gs[e.index];
        if (gap <= 0.0) {
          ++stats.at_optimum;
          continue;
        }
      }
      if (ctx.synced) ctx.c.apply_fw_step(l, j, ctx.alpha);
      else ctx.c.apply_fw_step_unsynced(l, j, ctx.alpha);
      ++stats.stepped;
    }
    return stats;
  }

 private:
  std::size_t m_;
  std::vector<std::size_t> active_;
  Eigen::MatrixXd residual_;
  Eigen::MatrixXd grad_;
};

void accumulate(SweepStats& into, const SweepStats& s) {
  into.stepped += s.stepped;
  into.newly_frozen += s.newly_frozen;
  into.at_optimum += s.at_optimum;
}

}  // namespace

void SolveConfig::validate() const {
  SmoothingParams{mu, lambda}.validate();
  if (max_sweeps < 1) throw ContractError("max_sweeps must be >= 1");
  if (!(per_column_tol >= 0.0)) throw ContractError("per_column_tol must be >= 0");
}

std::size_t fw_select_vertex(std::span<const double> g) {
  if (g.empty()) throw ContractError("fw_select_vertex: empty gradient");
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i] < g[best]) best = i;
  return best;
}

SweepStats fw_sweep(const DenseMatrix& x, CoefficientMatrix& c, std::size_t t,
                    const SolveConfig& cfg, std::vector<std::uint8_t>& frozen) {
  const std::size_t n = x.cols();
  if (c.dim() != n) throw ContractError("fw_sweep: coefficient dimension does not match X");
  if (frozen.size() != n) frozen.assign(n, 0);
  std::optional<RowSoftmaxState> softmax;
  if (cfg.lambda > 0.0) softmax = RowSoftmaxState::build(c, cfg.mu);

  const double alpha = 2.0 / (static_cast<double>(t) + 2.0);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(cfg.threads, 1u), blocks));

  SweepStats total;
  if (threads <= 1) {
    BlockContext ctx{x, c, cfg, softmax, frozen, alpha, true};
    BlockWorker worker(x.rows());
    for (std::size_t b = 0; b < blocks; ++b)
      accumulate(total, worker.run(ctx, b * kBlock, std::min(n, (b + 1) * kBlock)));
    return total;
  }

  std::vector<SweepStats> partial(threads);
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          BlockContext ctx{x, c, cfg, softmax, frozen, alpha, false};
          BlockWorker worker(x.rows());
          for (std::size_t b = w; b < blocks; b += threads)
            accumulate(partial[w], worker.run(ctx, b * kBlock, std::min(n, (b + 1) * kBlock)));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  c.rebuild_aggregates();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& s : partial) accumulate(total, s);
  return total;
}

std::vector<double> column_residual_norms(const DenseMatrix& x, const CoefficientMatrix& c) {
  std::vector<double> out(c.dim());
  std::vector<double> r(x.rows());
  for (std::size_t l = 0; l < c.dim(); ++l) {
    const auto xl = x.col(l);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = -xl[k];
    for (const auto& e : c.column(l).entries()) {
      const auto xi = x.col(e.index);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] += e.value * xi[k];
    }
    out[l] = norm2(r);
  }
  return out;
}

double regularized_objective(const DenseMatrix& x, const CoefficientMatrix& c, double lambda,
                             double mu) {
  double fit = 0.0;
  for (double r : column_residual_norms(x, c)) fit += r * r;
  double value = 0.5 * fit;
  if (lambda > 0.0) value += lambda * phi_mu_total(c, mu);
  return value;
}

SolveResult solve(const DenseMatrix& x, const SolveConfig& cfg,
                  std::optional<CoefficientMatrix> init, const SweepObserver& observer) {
  cfg.validate();
  const std::size_t n = x.cols();
  if (n == 0 || x.rows() == 0) throw ContractError("solve: X must be nonempty");

  SolveResult out;
  std::size_t t0 = 0;
  if (init) {
    if (init->dim() != n)
      throw InfeasibleError("warm start has dimension " + std::to_string(init->dim()) +
                            ", expected " + std::to_string(n));
    if (!init->is_feasible())
      throw InfeasibleError("warm start columns must be nonnegative and sum to 1");
    if (cfg.t_init < 1) throw ContractError("warm start requires t_init >= 1");
    out.coefficients = std::move(*init);
    t0 = cfg.t_init;
  } else {
    out.coefficients = CoefficientMatrix(n);
  }
  auto& c = out.coefficients;
  auto& rep = out.report;
  rep.t_init = t0;
  rep.peak_nonzero_rows = c.nonzero_rows();
  rep.peak_total_nnz = c.total_nnz();

  std::vector<std::uint8_t> frozen(n, 0);
  std::size_t frozen_count = 0;
  for (std::size_t s = 0; s < cfg.max_sweeps; ++s) {
    const std::size_t t = t0 + s;
    const auto stats = fw_sweep(x, c, t, cfg, frozen);
    frozen_count += stats.newly_frozen;
    ++rep.sweeps_run;
    rep.peak_total_nnz = std::max(rep.peak_total_nnz, c.total_nnz());
    if (cfg.track_support) rep.peak_nonzero_rows = std::max(rep.peak_nonzero_rows, c.nonzero_rows());
    const double obj = regularized_objective(x, c, cfg.lambda, cfg.mu);
    if (!std::isfinite(obj)) throw NumericalError("objective became non-finite at t = " + std::to_string(t));
    rep.objective_trace.push_back(obj);
    if (observer) observer(t, c);
    if (frozen_count == n) break;
  }
  rep.peak_nonzero_rows = std::max(rep.peak_nonzero_rows, c.nonzero_rows());
  rep.final_residual_per_column = column_residual_norms(x, c);
  rep.frozen_columns = frozen_count;
  rep.support_union_size = c.nonzero_rows();
  return out;
}

}  // namespace merit
