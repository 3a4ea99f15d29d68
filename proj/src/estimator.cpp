#include "merit/estimator.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "merit/error.hpp"
#include "merit/spa.hpp"

namespace merit {
namespace {

// Minimizes 0.5 theta^T G theta - b^T theta (+ const) over the simplex.
class GramSimplexSolver {
 public:
  GramSimplexSolver(const Eigen::MatrixXd& gram, const SimplexLsConfig& cfg)
      : g_(gram), cfg_(cfg), k_(gram.rows()) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& b, double target_sq) const {
    // Start at the best single vertex: 0.5 G_ii - b_i.
    Eigen::Index start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k_; ++i) {
      const double v = 0.5 * g_(i, i) - b(i);
      if (v < best) {
        best = v;
        start = i;
      }
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k_);
    theta(start) = 1.0;
    Eigen::VectorXd gtheta = g_.col(start);
    double f = best + 0.5 * target_sq;

    for (std::size_t it = 0; it < cfg_.max_iters; ++it) {
      const Eigen::VectorXd grad = gtheta - b;
      const double inner = grad.dot(theta);
      Eigen::Index s = 0;
      for (Eigen::Index i = 1; i < k_; ++i)
        if (grad(i) < grad(s)) s = i;
      Eigen::Index v = -1;
      for (Eigen::Index i = 0; i < k_; ++i)
        if (theta(i) > 0.0 && (v < 0 || grad(i) > grad(v))) v = i;
      const double fw_gap = inner - grad(s);
      const double away_gap = grad(v) - inner;
      if (fw_gap <= 0.0 && away_gap <= 0.0) break;

      // Direction d and its image G d.
      Eigen::VectorXd dir, gdir;
      double max_step;
      if (fw_gap >= away_gap) {
        dir = -theta;
        dir(s) += 1.0;
        gdir = g_.col(s) - gtheta;
        max_step = 1.0;
      } else {
        dir = theta;
        dir(v) -= 1.0;
        gdir = gtheta - g_.col(v);
        max_step = theta(v) / (1.0 - theta(v));
      }
      const double slope = grad.dot(dir);
      if (slope >= 0.0) break;
      const double curv = dir.dot(gdir);
      double step = curv > 0.0 ? std::min(-slope / curv, max_step) : max_step;
      const bool drop = step == max_step && fw_gap < away_gap;
      theta += step * dir;
      gtheta += step * gdir;
      if (drop) theta(v) = 0.0;
      for (Eigen::Index i = 0; i < k_; ++i)
        if (theta(i) < 0.0) theta(i) = 0.0;

      const double f_next = f + step * slope + 0.5 * step * step * curv;
      const double decrease = f - f_next;
      f = f_next;
      if (decrease <= cfg_.tol * std::max(f, 0.0)) break;
    }
    const double total = theta.sum();
    theta /= total;
    return theta;
  }

 private:
  const Eigen::MatrixXd& g_;
  SimplexLsConfig cfg_;
  Eigen::Index k_;
};

Eigen::Map<const Eigen::MatrixXd> as_eigen(const DenseMatrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

}  // namespace

void SimplexLsConfig::validate() const {
  if (max_iters < 1) throw ContractError("simplex_ls: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ContractError("simplex_ls: tol must be >= 0");
}

DenseMatrix simplex_ls_columns(const DenseMatrix& d, const DenseMatrix& targets,
                               const SimplexLsConfig& cfg) {
  cfg.validate();
  if (d.cols() < 1) throw ContractError("simplex_ls: dictionary needs at least one column");
  if (targets.rows() != d.rows()) throw ContractError("simplex_ls: target length mismatch");
  const auto dm = as_eigen(d);
  const auto tm = as_eigen(targets);
  const Eigen::MatrixXd gram = dm.transpose() * dm;
  const Eigen::MatrixXd cross = dm.transpose() * tm;
  GramSimplexSolver solver(gram, cfg);
  DenseMatrix out(d.cols(), targets.cols());
  for (std::size_t l = 0; l < targets.cols(); ++l) {
    const auto idx = static_cast<Eigen::Index>(l);
    const Eigen::VectorXd theta = solver.solve(cross.col(idx), tm.col(idx).squaredNorm());
    std::copy(theta.data(), theta.data() + theta.size(), out.col(l).begin());
  }
  return out;
}

std::vector<double> simplex_ls(const DenseMatrix& d, std::span<const double> target,
                               const SimplexLsConfig& cfg) {
  DenseMatrix t(target.size(), 1, std::vector<double>(target.begin(), target.end()));
  const DenseMatrix theta = simplex_ls_columns(d, t, cfg);
  return theta.data();
}

DenseMatrix estimate_h(const DenseMatrix& x, const AnchorSet& anchors, const SimplexLsConfig& cfg) {
  if (anchors.indices.empty()) throw ContractError("estimate_h: anchor set is empty");
  return simplex_ls_columns(x.select_cols(anchors.indices), x, cfg);
}

}  // namespace merit
