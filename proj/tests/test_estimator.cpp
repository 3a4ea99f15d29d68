#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "merit/estimator.hpp"
#include "merit/spa.hpp"
#include "merit/synth.hpp"
#include "oracles.hpp"

using namespace merit;

namespace {

double objective(const DenseMatrix& d, const std::vector<double>& theta, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double r = -b[i];
    for (std::size_t j = 0; j < d.cols(); ++j) r += d(i, j) * theta[j];
    s += r * r;
  }
  return 0.5 * s;
}

void check_simplex(const std::vector<double>& t) {
  double s = 0.0;
  for (double v : t) {
    CHECK(v >= 0.0);
    s += v;
  }
  CHECK(std::abs(s - 1.0) <= 1e-9);
}

}  // namespace

TEST_CASE("simplex_ls examples") {
  const auto id = DenseMatrix::identity(2);
  auto t = simplex_ls(id, std::vector<double>{0.3, 0.7});
  CHECK(t[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(t[1] == doctest::Approx(0.7).epsilon(1e-9));
  t = simplex_ls(id, std::vector<double>{2.0, 0.0});
  CHECK(t == std::vector<double>{1.0, 0.0});
}

TEST_CASE("simplex_ls against the grid oracle") {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = oracle::random_matrix(6, 3, g);
    const auto p = oracle::random_simplex_point(3, g);
    std::vector<double> b(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 3; ++j) b[i] += d(i, j) * p[j];
    const auto theta = simplex_ls(d, b);
    check_simplex(theta);
    CHECK(objective(d, theta, b) <= oracle::simplex_grid_min3(d, b, 1e-3) + 1e-6);
  }
}

TEST_CASE("simplex_ls against the brute-force QP with an outside target") {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = oracle::random_matrix(5, 7, g);
    const auto b = oracle::random_matrix(5, 1, g, -0.5, 1.5).data();
    const auto theta = simplex_ls(d, b);
    check_simplex(theta);
    CHECK(objective(d, theta, b) <= oracle::simplex_qp_bruteforce(d, b).objective + 1e-9);
  }
}

TEST_CASE("rank-deficient dictionaries are allowed") {
  const auto d = DenseMatrix::from_rows({{1, 1, 0}, {0, 0, 1}});
  const auto t = simplex_ls(d, std::vector<double>{0.5, 0.5});
  check_simplex(t);
  CHECK(t[0] + t[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(simplex_ls(d, std::vector<double>{0.5, 0.5}) == t);
}

TEST_CASE("estimate_h examples") {
  const auto h = estimate_h(DenseMatrix::identity(2), AnchorSet{{0, 1}});
  CHECK(h == DenseMatrix::identity(2));

  std::mt19937_64 g(7);
  const auto x = oracle::random_matrix(3, 5, g);
  const auto one = estimate_h(x, AnchorSet{{2}});
  for (double v : one.data()) CHECK(v == 1.0);
}

TEST_CASE("estimate_h recovers ground truth on noiseless data") {
  const auto inst = generate(12, 5, 60, kNoiseless, 11);
  const auto hhat = estimate_h(inst.x, inst.anchors);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < hhat.data().size(); ++i) {
    num += std::pow(hhat.data()[i] - inst.h.data()[i], 2);
    den += std::pow(inst.h.data()[i], 2);
  }
  CHECK(std::sqrt(num / den) <= 1e-4);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto col = hhat.col(inst.anchors.indices[k]);
    for (std::size_t r = 0; r < 5; ++r) CHECK(std::abs(col[r] - (r == k ? 1.0 : 0.0)) <= 1e-6);
  }
}

TEST_CASE("estimate_h columns are feasible and the fit improves with more anchors") {
  const auto inst = generate(10, 4, 40, 12.0, 19);
  const auto order = spa_select(inst.x, 8).anchors.indices;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= order.size(); ++k) {
    const AnchorSet a{{order.begin(), order.begin() + static_cast<long>(k)}};
    const auto h = estimate_h(inst.x, a);
    double fit = 0.0;
    for (std::size_t l = 0; l < 40; ++l) {
      const std::vector<double> theta(h.col(l).begin(), h.col(l).end());
      check_simplex(theta);
      fit += objective(inst.x.select_cols(a.indices), theta, inst.x.col(l));
    }
    CHECK(fit <= prev + 1e-8);
    prev = fit;
  }
}

TEST_CASE("config validation") {
  SimplexLsConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS(cfg.validate());
}
