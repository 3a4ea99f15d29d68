#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library under test except the DenseMatrix container.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"

namespace oracle {

using merit::DenseMatrix;

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) e(i, j) = m(i, j);
  return e;
}

inline Eigen::MatrixXd dense_c(const merit::CoefficientMatrix& c) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(c.dim(), c.dim());
  for (std::size_t l = 0; l < c.dim(); ++l)
    for (const auto& en : c.column(l).entries()) e(en.index, l) = en.value;
  return e;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g, double lo = 0.0,
                                 double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = u(g);
  return m;
}

inline std::vector<double> random_simplex_point(std::size_t k, std::mt19937_64& g) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (double& v : p) s += (v = e(g));
  for (double& v : p) v /= s;
  return p;
}

struct QpResult {
  std::vector<double> theta;
  double objective = std::numeric_limits<double>::infinity();
};

// min 0.5 ||D theta - b||^2 over the simplex by enumerating every support:
// on a support S the KKT system [G_SS 1; 1^T 0][theta; nu] = [D_S^T b; 1]
// is solved with a rank-revealing decomposition and kept if theta >= 0.
// The optimum is attained on some support, so the best feasible candidate
// is the global minimum. Exponential in k; used for k <= 12.
inline QpResult simplex_qp_bruteforce(const DenseMatrix& d, const std::vector<double>& b) {
  const Eigen::MatrixXd de = to_eigen(d);
  const Eigen::Map<const Eigen::VectorXd> be(b.data(), static_cast<Eigen::Index>(b.size()));
  const int k = static_cast<int>(d.cols());
  QpResult best;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) s.push_back(i);
    const int m = static_cast<int>(s.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (int a = 0; a < m; ++a) {
      for (int c = 0; c < m; ++c) kkt(a, c) = de.col(s[a]).dot(de.col(s[c]));
      kkt(a, m) = kkt(m, a) = 1.0;
      rhs(a) = de.col(s[a]).dot(be);
    }
    rhs(m) = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    std::vector<double> theta(k, 0.0);
    bool ok = true;
    double sum = 0.0;
    for (int a = 0; a < m; ++a) {
      if (sol(a) < -1e-12) ok = false;
      theta[s[a]] = std::max(0.0, sol(a));
      sum += theta[s[a]];
    }
    if (!ok || std::abs(sum - 1.0) > 1e-8) continue;
    Eigen::VectorXd th = Eigen::Map<Eigen::VectorXd>(theta.data(), k);
    const double obj = 0.5 * (de * th - be).squaredNorm();
    if (obj < best.objective) {
      best.objective = obj;
      best.theta = theta;
    }
  }
  return best;
}

// Exhaustive grid over the 2-simplex (k = 3) at the given resolution.
inline double simplex_grid_min3(const DenseMatrix& d, const std::vector<double>& b, double step) {
  const Eigen::MatrixXd de = to_eigen(d);
  const Eigen::Map<const Eigen::VectorXd> be(b.data(), static_cast<Eigen::Index>(b.size()));
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; i + j <= steps; ++j) {
      const double a = i * step, c = j * step, e = 1.0 - a - c;
      const Eigen::VectorXd r = a * de.col(0) + c * de.col(1) + e * de.col(2) - be;
      best = std::min(best, 0.5 * r.squaredNorm());
    }
  return best;
}

// Cyclic Jacobi rotations on a dense symmetric matrix; eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (Eigen::Index i = 0; i < n; ++i) ev[i] = a(i, i);
  std::ranges::sort(ev, std::greater<>());
  return ev;
}

// Direct evaluation of mu log(mean exp(x / mu)) in long double with a shift.
inline long double phi_direct(const std::vector<long double>& x, long double mu) {
  const long double m = *std::ranges::max_element(x);
  long double s = 0.0L;
  for (long double v : x) s += std::exp((v - m) / mu);
  return m + mu * std::log(s / static_cast<long double>(x.size()));
}

// 0.5 ||X - XC||_F^2 + lambda * sum_n phi_mu(C(n, :)) on a dense C.
inline long double objective_dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c,
                                   double lambda, double mu) {
  const Eigen::MatrixXd r = x - x * c;
  long double f = 0.5L * static_cast<long double>(r.squaredNorm());
  if (lambda > 0.0)
    for (Eigen::Index n = 0; n < c.rows(); ++n) {
      std::vector<long double> row(c.cols());
      for (Eigen::Index i = 0; i < c.cols(); ++i) row[i] = c(n, i);
      f += static_cast<long double>(lambda) * phi_direct(row, mu);
    }
  return f;
}

inline double largest_eigenvalue_gram(const DenseMatrix& x) {
  const Eigen::MatrixXd e = to_eigen(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.transpose() * e);
  return es.eigenvalues().maxCoeff();
}

}  // namespace oracle
