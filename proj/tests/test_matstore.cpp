#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/error.hpp"
#include "oracles.hpp"

using namespace merit;

namespace {

const DenseMatrix kToy = DenseMatrix::from_rows({{1, 0, 0.7}, {0, 1, 0.3}});

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - want[i]) <= tol * std::max(1.0, std::abs(want[i])));
}

// Aggregates recomputed from the columns alone.
void check_aggregates(const CoefficientMatrix& c) {
  const std::size_t n = c.dim();
  std::vector<double> mx(n, 0.0);
  std::vector<std::uint32_t> nnz(n, 0);
  std::size_t total = 0;
  for (std::size_t l = 0; l < n; ++l)
    for (const auto& e : c.column(l).entries()) {
      mx[e.index] = std::max(mx[e.index], e.value);
      ++nnz[e.index];
      ++total;
    }
  CHECK(c.row_nnz() == nnz);
  CHECK(c.total_nnz() == total);
  CHECK(c.nonzero_rows() == static_cast<std::size_t>(std::ranges::count_if(nnz, [](auto v) { return v > 0; })));
  const auto& got = c.row_max();
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - mx[i]) <= 1e-12);
}

}  // namespace

TEST_CASE("dense matrix layout and validation") {
  const auto m = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(m.data() == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(m.transposed()(2, 1) == 6);
  CHECK(m.frobenius_norm() == doctest::Approx(std::sqrt(91.0)));
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), ContractError);
  CHECK_THROWS_AS(DenseMatrix(1, 1, std::vector<double>{std::nan("")}), ContractError);
}

TEST_CASE("mat_vec") {
  SUBCASE("identity picks the stored row") {
    auto c = SparseSimplexColumn::unit(3, 1);
    check_close(mat_vec(DenseMatrix::identity(3), c), {0, 1, 0}, 0);
  }
  SUBCASE("convex combination of two columns") {
    auto c = SparseSimplexColumn::from_entries(3, {{0, 0.5}, {1, 0.5}});
    check_close(mat_vec(kToy, c), {0.5, 0.5}, 1e-15);
  }
  SUBCASE("unit vector selects a column") {
    std::mt19937_64 g(5);
    const auto x = oracle::random_matrix(4, 6, g);
    for (std::size_t j = 0; j < 6; ++j) {
      const auto v = mat_vec(x, SparseSimplexColumn::unit(6, j));
      CHECK(std::ranges::equal(v, x.col(j)));
    }
  }
  CHECK_THROWS_AS(mat_vec(kToy, SparseSimplexColumn::unit(4, 0)), ContractError);
}

TEST_CASE("residual_gradient_column") {
  SUBCASE("empty column") {
    check_close(residual_gradient_column(kToy, SparseSimplexColumn(3), 2), {-0.7, -0.3, -0.58}, 1e-14);
  }
  SUBCASE("self-representation has zero gradient") {
    std::mt19937_64 g(9);
    const auto x = oracle::random_matrix(5, 7, g);
    for (double v : residual_gradient_column(x, SparseSimplexColumn::unit(7, 3), 3)) CHECK(v == 0.0);
  }
  SUBCASE("identity") {
    check_close(residual_gradient_column(DenseMatrix::identity(2), SparseSimplexColumn::unit(2, 0), 1),
                {1, -1}, 0);
  }
  SUBCASE("matches the dense Gram formula") {
    std::mt19937_64 g(11);
    const auto x = oracle::random_matrix(6, 9, g);
    const auto c = SparseSimplexColumn::from_entries(9, {{1, 0.2}, {4, 0.3}, {8, 0.5}});
    const auto xe = oracle::to_eigen(x);
    Eigen::VectorXd ce = Eigen::VectorXd::Zero(9);
    ce(1) = 0.2;
    ce(4) = 0.3;
    ce(8) = 0.5;
    const Eigen::VectorXd want = xe.transpose() * xe * ce - xe.transpose() * xe.col(2);
    const auto got = residual_gradient_column(x, c, 2);
    for (int i = 0; i < 9; ++i) CHECK(got[i] == doctest::Approx(want(i)).epsilon(1e-12));
  }
}

TEST_CASE("sparse simplex column construction") {
  CHECK_THROWS_AS(SparseSimplexColumn::from_entries(3, {{0, 0.5}, {1, 0.4}}), InfeasibleError);
  CHECK_THROWS_AS(SparseSimplexColumn::from_entries(3, {{0, 1.5}, {1, -0.5}}), InfeasibleError);
  CHECK_THROWS_AS(SparseSimplexColumn::from_entries(3, {{3, 1.0}}), InfeasibleError);
  CHECK_THROWS_AS(SparseSimplexColumn::from_entries(4, {{2, 0.25}, {0, 0.75}}), InfeasibleError);
  const auto c = SparseSimplexColumn::from_entries(4, {{0, 0.75}, {2, 0.25}});
  CHECK(c.entries()[0].index == 0);
  CHECK(c.value_at(2) == 0.25);
  CHECK(c.value_at(1) == 0.0);
}

TEST_CASE("apply_fw_step") {
  SUBCASE("alpha one from empty gives a unit vector") {
    CoefficientMatrix c(6);
    c.apply_fw_step(0, 4, 1.0);
    REQUIRE(c.column(0).size() == 1);
    CHECK(c.column(0).entries()[0] == SparseEntry{4, 1.0});
    check_aggregates(c);
  }
  SUBCASE("half step") {
    CoefficientMatrix c(3);
    c.set_column(1, SparseSimplexColumn::unit(3, 0));
    c.apply_fw_step(1, 2, 0.5);
    const std::vector<SparseEntry> want{{0, 0.5}, {2, 0.5}};
    CHECK(std::ranges::equal(c.column(1).entries(), want));
    check_aggregates(c);
  }
  SUBCASE("zero step leaves the column alone") {
    CoefficientMatrix c(3);
    c.set_column(0, SparseSimplexColumn::from_entries(3, {{0, 0.5}, {2, 0.5}}));
    const auto before = c.column(0);
    c.apply_fw_step(0, 1, 0.0);
    CHECK(c.column(0) == before);
  }
  SUBCASE("purge drops entries below threshold") {
    CoefficientMatrix c(2);
    c.set_column(0, SparseSimplexColumn::from_entries(2, {{0, 1.0 - 1e-15}, {1, 1e-15}}));
    c.apply_fw_step(0, 0, 0.5);
    CHECK(c.column(0).size() == 1);
    check_aggregates(c);
  }
}

TEST_CASE("row_inf_norms") {
  SUBCASE("single column") {
    CoefficientMatrix c(5);
    c.set_column(0, SparseSimplexColumn::unit(5, 3));
    check_close(row_inf_norms(c), {0, 0, 0, 1, 0}, 0);
  }
  SUBCASE("two columns") {
    CoefficientMatrix c(3);
    c.set_column(0, SparseSimplexColumn::unit(3, 0));
    c.set_column(1, SparseSimplexColumn::from_entries(3, {{0, 0.4}, {1, 0.6}}));
    check_close(row_inf_norms(c), {1.0, 0.6, 0.0}, 0);
  }
  SUBCASE("empty") {
    CoefficientMatrix c(4);
    check_close(row_inf_norms(c), {0, 0, 0, 0}, 0);
  }
}

TEST_CASE("incremental aggregates match recomputation under random steps") {
  std::mt19937_64 g(21);
  const std::size_t n = 25;
  CoefficientMatrix c(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t l = 0; l < n; ++l) c.apply_fw_step(l, pick(g), 1.0);
  for (int step = 0; step < 20000; ++step) {
    const std::size_t l = pick(g), j = pick(g) % 6;  // concentrate on few rows
    const double alpha = step % 7 == 0 ? 1.0 : u(g) * u(g);
    c.apply_fw_step(l, j, alpha);
    if (step % 997 == 0) check_aggregates(c);
  }
  check_aggregates(c);
  CHECK(c.is_feasible());
}

TEST_CASE("column sum survives many shrinking steps") {
  CoefficientMatrix c(50);
  c.apply_fw_step(0, 0, 1.0);
  for (std::size_t t = 1; t <= 10000; ++t) c.apply_fw_step(0, t % 50, 2.0 / (static_cast<double>(t) + 2.0));
  CHECK(std::abs(c.column(0).sum() - 1.0) <= 1e-9);
  for (const auto& e : c.column(0).entries()) CHECK(e.value > 0.0);
}

TEST_CASE("parallel-style updates then rebuild agree with synchronized updates") {
  std::mt19937_64 g(3);
  const std::size_t n = 30;
  CoefficientMatrix a(n), b(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int step = 0; step < 500; ++step) {
    const std::size_t l = pick(g), j = pick(g);
    const double alpha = 2.0 / (step / 30 + 2.0);
    a.apply_fw_step(l, j, alpha);
    b.apply_fw_step_unsynced(l, j, alpha);
  }
  b.rebuild_aggregates();
  CHECK(a.row_nnz() == b.row_nnz());
  CHECK(a.row_max() == b.row_max());
  CHECK(a.total_nnz() == b.total_nnz());
}

TEST_CASE("memory accounting") {
  CoefficientMatrix c(10);
  CHECK(c.accounted_bytes() == 10 * CoefficientMatrix::kAggregateBytesPerRow);
  CHECK(CoefficientMatrix::kAggregateBytesPerRow == 2 * sizeof(double));
  for (std::size_t l = 0; l < 10; ++l) c.apply_fw_step(l, l % 3, 1.0);
  c.apply_fw_step(0, 1, 0.5);
  CHECK(c.total_nnz() == 11);
  CHECK(c.accounted_bytes() == 11 * sizeof(SparseEntry) + 10 * CoefficientMatrix::kAggregateBytesPerRow);
}

TEST_CASE("feasibility and support queries") {
  CoefficientMatrix c(4);
  CHECK_FALSE(c.is_feasible());  // empty columns do not sum to one
  for (std::size_t l = 0; l < 4; ++l) c.apply_fw_step(l, l < 2 ? 1 : 3, 1.0);
  CHECK(c.is_feasible());
  CHECK(c.support_rows() == std::vector<std::size_t>{1, 3});
}
