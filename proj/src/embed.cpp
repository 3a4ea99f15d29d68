#include "merit/embed.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "merit/error.hpp"
#include "merit/rng.hpp"

namespace merit {
namespace {

// Y = A Q from the packed upper triangle.
Eigen::MatrixXd multiply(const SymmetricMatrix& a, const Eigen::MatrixXd& q) {
  const std::size_t n = a.size();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    const double* qc = q.col(c).data();
    double* yc = y.col(c).data();
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < j; ++i) {
        const double aij = a(i, j);
        acc += aij * qc[i];
        yc[i] += aij * qc[j];
      }
      yc[j] += acc + a(j, j) * qc[j];
    }
  }
  return y;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& z) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  return qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
}

}  // namespace

SymmetricMatrix SymmetricMatrix::from_upper(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw ContractError("SymmetricMatrix: input must be square");
  SymmetricMatrix s(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i <= j; ++i) s.set(i, j, m(i, j));
  return s;
}

DenseMatrix SymmetricMatrix::to_dense() const {
  DenseMatrix d(n_, n_);
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t i = 0; i < n_; ++i) d(i, j) = (*this)(i, j);
  return d;
}

SymmetricMatrix SymmetricMatrix::principal_submatrix(const std::vector<std::size_t>& idx) const {
  SymmetricMatrix s(idx.size());
  for (std::size_t b = 0; b < idx.size(); ++b) {
    if (idx[b] >= n_) throw ContractError("principal_submatrix: index out of range");
    for (std::size_t a = 0; a <= b; ++a) s.set(a, b, (*this)(idx[a], idx[b]));
  }
  return s;
}

std::vector<double> SymmetricMatrix::column_sq_norms() const {
  std::vector<double> out(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t i = 0; i < n_; ++i) out[j] += (*this)(i, j) * (*this)(i, j);
  return out;
}

double SymmetricMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : column_sq_norms()) s += v;
  return std::sqrt(s);
}

double SymmetricMatrix::max_abs_row_sum() const {
  double best = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

EigenPairs top_eigenpairs(const SymmetricMatrix& a, std::size_t k, double tol,
                          std::size_t max_iters) {
  const std::size_t n = a.size();
  if (k < 1 || k > n) throw ContractError("top_eigenpairs: need 1 <= k <= n");
  const auto nn = static_cast<Eigen::Index>(n);
  const auto kk = static_cast<Eigen::Index>(k);
  const double shift = a.max_abs_row_sum();
  const double scale = a.frobenius_norm();

  CounterRng rng(0x6f7274686f697465ULL);
  Eigen::MatrixXd start(nn, kk);
  for (Eigen::Index c = 0; c < kk; ++c)
    for (Eigen::Index r = 0; r < nn; ++r) start(r, c) = rng.normal();
  Eigen::MatrixXd q = orthonormalize(start);
  Eigen::MatrixXd aq = multiply(a, q);

  EigenPairs out;
  Eigen::VectorXd lambda(kk);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    q = orthonormalize(aq + shift * q);
    aq = multiply(a, q);
    // Rayleigh-Ritz on the current subspace.
    Eigen::MatrixXd t = q.transpose() * aq;
    t = 0.5 * (t + t.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::MatrixXd v = eig.eigenvectors().rowwise().reverse();
    lambda = eig.eigenvalues().reverse();
    q = q * v;
    aq = aq * v;
    out.iterations = it;
    out.residual = (aq - q * lambda.asDiagonal()).norm();
    if (out.residual <= tol * scale) {
      out.converged = true;
      break;
    }
  }

  // Deterministic signs: largest-magnitude component positive.
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index arg = 0;
    q.col(c).cwiseAbs().maxCoeff(&arg);
    if (q(arg, c) < 0.0) q.col(c) *= -1.0;
  }
  out.values.assign(lambda.data(), lambda.data() + kk);
  out.vectors = DenseMatrix(n, k, std::vector<double>(q.data(), q.data() + q.size()));
  return out;
}

std::vector<std::size_t> energy_filter(const SymmetricMatrix& a, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ContractError("energy_filter: fraction must lie in (0, 1]");
  const std::size_t n = a.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto sq = a.column_sq_norms();
  if (fraction >= 1.0) return all;
  std::vector<std::size_t> order = all;
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return sq[x] > sq[y]; });
  double total = 0.0;
  for (std::size_t i : order) total += sq[i];
  if (!(total > 0.0)) return all;
  std::vector<std::size_t> kept;
  double cum = 0.0;
  for (std::size_t i : order) {
    kept.push_back(i);
    cum += sq[i];
    if (cum >= fraction * total) break;
  }
  std::ranges::sort(kept);
  return kept;
}

DenseMatrix reduce_rows(const SymmetricMatrix& x, std::size_t target_rows, double tol,
                        std::size_t max_iters) {
  const auto eig = top_eigenpairs(x, target_rows, tol, max_iters);
  Eigen::Map<const Eigen::MatrixXd> u(eig.vectors.data().data(),
                                      static_cast<Eigen::Index>(x.size()),
                                      static_cast<Eigen::Index>(target_rows));
  const Eigen::MatrixXd xu = multiply(x, u);  // = (U^T X)^T
  const Eigen::MatrixXd out = xu.transpose();
  return DenseMatrix(target_rows, x.size(), std::vector<double>(out.data(), out.data() + out.size()));
}

}  // namespace merit
