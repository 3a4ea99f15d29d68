#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "merit/spa.hpp"
#include "merit/synth.hpp"
#include "oracles.hpp"

using namespace merit;

namespace {

// SPA through an explicit projector P = I - QQ^T rebuilt from a QR of the
// picked columns at every step.
std::vector<std::size_t> spa_oracle(const DenseMatrix& x, std::size_t k, double* worst_orth) {
  const Eigen::MatrixXd xe = oracle::to_eigen(x);
  std::vector<std::size_t> picks;
  Eigen::MatrixXd r = xe;
  for (std::size_t step = 0; step < k; ++step) {
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      if (r.col(j).squaredNorm() > best_norm * (1 + 1e-12)) {
        best_norm = r.col(j).squaredNorm();
        best = j;
      }
    picks.push_back(static_cast<std::size_t>(best));
    Eigen::MatrixXd basis(xe.rows(), picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) basis.col(i) = xe.col(picks[i]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(xe.rows(), picks.size());
    r = xe - q * (q.transpose() * xe);
    if (worst_orth) *worst_orth = std::max(*worst_orth, (q.transpose() * r).cwiseAbs().maxCoeff());
  }
  return picks;
}

}  // namespace

TEST_CASE("identity picks columns in index order") {
  const auto r = spa_select(DenseMatrix::identity(4), 4);
  CHECK(r.anchors.indices == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_FALSE(r.rank_deficient);
}

TEST_CASE("toy matrix") {
  const auto x = DenseMatrix::from_rows({{1, 0, 0.7}, {0, 1, 0.3}});
  CHECK(spa_select(x, 2).anchors.indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("noiseless separable data recovers the anchor set") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate(20, 6, 80, kNoiseless, seed);
    CHECK(spa_select(inst.x, 6).anchors.same_set(inst.anchors));
  }
}

TEST_CASE("agrees with the projector oracle") {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_matrix(8, 25, g);
    double worst = 0.0;
    const auto want = spa_oracle(x, 6, &worst);
    CHECK(spa_select(x, 6).anchors.indices == want);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("permutation invariance as a set") {
  std::mt19937_64 g(4);
  const auto x = oracle::random_matrix(7, 30, g);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), g);
  const auto xp = x.select_cols(perm);
  auto a = spa_select(x, 5).anchors;
  auto b = spa_select(xp, 5).anchors;
  for (auto& i : b.indices) i = perm[i];
  CHECK(a.same_set(b));
}

TEST_CASE("rank deficiency stops early") {
  const auto x = DenseMatrix::from_rows({{1, 2, 3}, {1, 2, 3}});
  const auto r = spa_select(x, 2);
  CHECK(r.rank_deficient);
  CHECK(r.anchors.size() == 1);
  CHECK(r.anchors.indices[0] == 2);
}

TEST_CASE("warm start construction") {
  SUBCASE("single column") {
    const auto c = build_warm_start(DenseMatrix::from_rows({{2.0}}), AnchorSet{{0}});
    CHECK(c.column(0) == SparseSimplexColumn::unit(1, 0));
  }
  SUBCASE("identity") {
    const auto c = build_warm_start(DenseMatrix::identity(2), AnchorSet{{0, 1}});
    CHECK(c.column(0) == SparseSimplexColumn::unit(2, 0));
    CHECK(c.column(1) == SparseSimplexColumn::unit(2, 1));
  }
  SUBCASE("noiseless toy fits exactly on the anchors") {
    const auto inst = generate(4, 2, 6, kNoiseless, 8);
    const auto c = build_warm_start(inst.x, inst.anchors);
    double sq = 0.0;
    for (double r : column_residual_norms(inst.x, c)) sq += r * r;
    CHECK(std::sqrt(sq) <= 1e-6);
    CHECK(c.is_feasible());
    CHECK(c.nonzero_rows() <= 2);
  }
  SUBCASE("support stays on the anchors") {
    const auto inst = generate(10, 4, 50, 10.0, 3);
    const auto a = spa_select(inst.x, 4).anchors;
    const auto c = build_warm_start(inst.x, a);
    CHECK(c.nonzero_rows() <= 4);
    for (std::size_t r : c.support_rows()) CHECK(std::ranges::find(a.indices, r) != a.indices.end());
  }
}

TEST_CASE("warm start offset") {
  const auto inst = generate(10, 4, 50, 10.0, 3);
  const auto c = build_warm_start(inst.x, spa_select(inst.x, 4).anchors);
  double sq = 0.0;
  for (double r : column_residual_norms(inst.x, c)) sq += r * r;
  const double rmse = std::sqrt(sq / 50.0);
  CHECK(warm_start_offset(inst.x, c) == static_cast<std::size_t>(std::llround(1.0 / rmse)));

  const auto exact = build_warm_start(DenseMatrix::identity(3), AnchorSet{{0, 1, 2}});
  CHECK(warm_start_offset(DenseMatrix::identity(3), exact) == kMaxWarmStartOffset);
}
