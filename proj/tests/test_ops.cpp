#include <cmath>
#include <span>

#include "doctest.h"
#include "drot/ops.hpp"
#include "drot/rng.hpp"
#include "support/oracles.hpp"

using drot::Matrix;

namespace {

// The Douglas-Rachford map T(Y) = Y + proj(2 [Y - rho C]_+ - Y) - [Y - rho C]_+
// assembled from the two primitives; used for the operator property tests.
Matrix<double> dr_map(const Matrix<double>& y, const Matrix<double>& cost,
                      const std::vector<double>& p,
                      const std::vector<double>& q, double rho) {
  auto x = drot::prox_nonneg_linear(y, cost, rho);
  Matrix<double> refl(y.rows(), y.cols());
  for (std::size_t k = 0; k < y.size(); ++k)
    refl.data()[k] = 2 * x.data()[k] - y.data()[k];
  auto z = drot::project_coupling(refl, std::span<const double>(p),
                                  std::span<const double>(q));
  Matrix<double> out(y.rows(), y.cols());
  for (std::size_t k = 0; k < y.size(); ++k)
    out.data()[k] = y.data()[k] + z.data()[k] - x.data()[k];
  return out;
}

}  // namespace

TEST_CASE("coupling projection leaves feasible points unchanged") {
  const std::vector<double> p{0.7, 0.3};
  const std::vector<double> q{0.4, 0.6};
  Matrix<double> x(2, 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i) x(i, j) = p[i] * q[j];
  auto z = drot::project_coupling(x, std::span<const double>(p),
                                  std::span<const double>(q));
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(z.data()[k] == doctest::Approx(x.data()[k]).epsilon(1e-14));
}

TEST_CASE("coupling projection of zero hits the uniform matrix") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{0.5, 0.5};
  Matrix<double> x(2, 2, 0.0);
  auto z = drot::project_coupling(x, std::span<const double>(p),
                                  std::span<const double>(q));
  for (double v : z.flat()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("coupling projection agrees with the KKT oracle") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{0.5, 0.5};
  auto x = Matrix<double>::from_rows({{1, 0}, {0, 0}});
  auto z = drot::project_coupling(x, std::span<const double>(p),
                                  std::span<const double>(q));
  auto ref = drot_tests::project_coupling_oracle(x, p, q);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(z.data()[k] == doctest::Approx(ref.data()[k]).epsilon(1e-10));

  drot::CounterRng rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t m = 2 + rng.next_below(4);
    const std::size_t n = 2 + rng.next_below(4);
    auto pp = drot_tests::random_simplex(m, rng.next_u64());
    auto qq = drot_tests::random_simplex(n, rng.next_u64());
    auto xx = drot_tests::random_matrix(m, n, rng.next_u64(), -1.0, 1.0);
    auto got = drot::project_coupling(xx, std::span<const double>(pp),
                                      std::span<const double>(qq));
    auto want = drot_tests::project_coupling_oracle(xx, pp, qq);
    for (std::size_t k = 0; k < xx.size(); ++k)
      CHECK(got.data()[k] == doctest::Approx(want.data()[k]).epsilon(1e-9));
  }
}

TEST_CASE("coupling projection restores the prescribed sums") {
  drot::CounterRng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 2 + rng.next_below(6);
    const std::size_t n = 2 + rng.next_below(6);
    auto p = drot_tests::random_simplex(m, rng.next_u64());
    auto q = drot_tests::random_simplex(n, rng.next_u64());
    auto x = drot_tests::random_matrix(m, n, rng.next_u64(), -2.0, 2.0);
    drot::CouplingProjectionScratch<double> scratch;
    auto z = drot::project_coupling(x, std::span<const double>(p),
                                    std::span<const double>(q), &scratch);
    auto rs = drot::row_sums(z);
    auto cs = drot::col_sums(z);
    for (std::size_t i = 0; i < m; ++i)
      CHECK(rs[i] == doctest::Approx(p[i]).epsilon(1e-10));
    for (std::size_t j = 0; j < n; ++j)
      CHECK(cs[j] == doctest::Approx(q[j]).epsilon(1e-10));

    // the two expressions for the mass correction agree
    const double gamma_col =
        drot::vec_sum(std::span<const double>(scratch.col_defect)) /
        static_cast<double>(m + n);
    CHECK(scratch.gamma == doctest::Approx(gamma_col).epsilon(1e-10));
  }
}

TEST_CASE("coupling projection is idempotent and affine") {
  drot::CounterRng rng(23);
  const std::size_t m = 4, n = 5;
  auto p = drot_tests::random_simplex(m, 1);
  auto q = drot_tests::random_simplex(n, 2);
  auto ps = std::span<const double>(p);
  auto qs = std::span<const double>(q);

  auto x = drot_tests::random_matrix(m, n, rng.next_u64(), -1.0, 1.0);
  auto y = drot_tests::random_matrix(m, n, rng.next_u64(), -1.0, 1.0);
  auto px = drot::project_coupling(x, ps, qs);
  auto ppx = drot::project_coupling(px, ps, qs);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(ppx.data()[k] == doctest::Approx(px.data()[k]).epsilon(1e-12));

  const double lam = 0.3;
  Matrix<double> mix(m, n);
  for (std::size_t k = 0; k < x.size(); ++k)
    mix.data()[k] = lam * x.data()[k] + (1 - lam) * y.data()[k];
  auto pmix = drot::project_coupling(mix, ps, qs);
  auto py = drot::project_coupling(y, ps, qs);
  for (std::size_t k = 0; k < x.size(); ++k)
    CHECK(pmix.data()[k] ==
          doctest::Approx(lam * px.data()[k] + (1 - lam) * py.data()[k])
              .epsilon(1e-12));
}

TEST_CASE("both proxes are nonexpansive") {
  drot::CounterRng rng(31);
  const std::size_t m = 5, n = 3;
  auto p = drot_tests::random_simplex(m, 3);
  auto q = drot_tests::random_simplex(n, 4);
  auto cost = drot_tests::random_matrix(m, n, 77);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = drot_tests::random_matrix(m, n, rng.next_u64(), -2.0, 2.0);
    auto y = drot_tests::random_matrix(m, n, rng.next_u64(), -2.0, 2.0);
    auto px = drot::project_coupling(x, std::span<const double>(p),
                                     std::span<const double>(q));
    auto py = drot::project_coupling(y, std::span<const double>(p),
                                     std::span<const double>(q));
    CHECK(drot::frobenius_distance(px, py) <=
          drot::frobenius_distance(x, y) + 1e-12);

    auto fx = drot::prox_nonneg_linear(x, cost, 0.4);
    auto fy = drot::prox_nonneg_linear(y, cost, 0.4);
    CHECK(drot::frobenius_distance(fx, fy) <=
          drot::frobenius_distance(x, y) + 1e-12);
  }
}

TEST_CASE("the composed splitting map is firmly nonexpansive") {
  drot::CounterRng rng(41);
  const std::size_t m = 4, n = 5;
  auto p = drot_tests::random_simplex(m, 8);
  auto q = drot_tests::random_simplex(n, 9);
  auto cost = drot_tests::random_matrix(m, n, 10);
  const double rho = 0.25;
  for (int trial = 0; trial < 10; ++trial) {
    auto y1 = drot_tests::random_matrix(m, n, rng.next_u64(), -1.0, 1.0);
    auto y2 = drot_tests::random_matrix(m, n, rng.next_u64(), -1.0, 1.0);
    auto t1 = dr_map(y1, cost, p, q, rho);
    auto t2 = dr_map(y2, cost, p, q, rho);
    double inner = 0, norm_sq = 0;
    for (std::size_t k = 0; k < y1.size(); ++k) {
      const double dt = t1.data()[k] - t2.data()[k];
      const double dy = y1.data()[k] - y2.data()[k];
      inner += dt * dy;
      norm_sq += dt * dt;
    }
    CHECK(inner >= norm_sq - 1e-10);
  }
}

TEST_CASE("clamped linear prox spec values") {
  auto y1 = Matrix<double>::from_rows({{0.5}});
  auto c1 = Matrix<double>::from_rows({{1.0}});
  CHECK(drot::prox_nonneg_linear(y1, c1, 1.0)(0, 0) == 0.0);

  auto y2 = Matrix<double>::from_rows({{2.0}});
  CHECK(drot::prox_nonneg_linear(y2, c1, 0.5)(0, 0) == doctest::Approx(1.5));

  auto y = drot_tests::random_matrix(4, 4, 51, -1.0, 1.0);
  auto c = drot_tests::random_matrix(4, 4, 52);
  auto out = drot::prox_nonneg_linear(y, c, 0.3);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) {
      const double want = std::max(y(i, j) - 0.3 * c(i, j), 0.0);
      CHECK(out(i, j) == doctest::Approx(want).epsilon(1e-15));
    }

  CHECK_THROWS_AS(drot::prox_nonneg_linear(y, c, 0.0), drot::Error);
  CHECK_THROWS_AS(drot::prox_nonneg_linear(y, c, -1.0), drot::Error);
}

TEST_CASE("range projection balances the two sides") {
  std::vector<double> y{1, 0}, x{0, 0};
  auto [yp, xp] = drot::project_range(std::span<const double>(y),
                                      std::span<const double>(x));
  CHECK(yp[0] == doctest::Approx(0.75));
  CHECK(yp[1] == doctest::Approx(-0.25));
  CHECK(xp[0] == doctest::Approx(0.25));
  CHECK(xp[1] == doctest::Approx(0.25));
  CHECK(yp[0] + yp[1] == doctest::Approx(xp[0] + xp[1]).epsilon(1e-12));

  // already balanced input is untouched
  std::vector<double> yb{0.3, 0.2}, xb{0.1, 0.4};
  auto [yb2, xb2] = drot::project_range(std::span<const double>(yb),
                                        std::span<const double>(xb));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(yb2[i] == doctest::Approx(yb[i]).epsilon(1e-15));
    CHECK(xb2[i] == doctest::Approx(xb[i]).epsilon(1e-15));
  }

  std::vector<double> z{0, 0, 0};
  auto [zy, zx] = drot::project_range(std::span<const double>(z),
                                      std::span<const double>(z));
  for (double v : zy) CHECK(v == 0.0);
  for (double v : zx) CHECK(v == 0.0);
}
