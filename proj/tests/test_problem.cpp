#include <cmath>

#include "doctest.h"
#include "drot/problem.hpp"
#include "drot/reference.hpp"
#include "drot/rng.hpp"
#include "support/oracles.hpp"

using drot::DualCertificate;
using drot::Errc;
using drot::Matrix;
using drot::TransportPlan;
using drot::TransportProblem;

namespace {

TransportProblem<double> diag_problem() {
  TransportProblem<double> p;
  p.cost = Matrix<double>::from_rows({{0, 1}, {1, 0}});
  p.p = {0.5, 0.5};
  p.q = {0.5, 0.5};
  return p;
}

}  // namespace

TEST_CASE("validate accepts a symmetric feasible instance") {
  CHECK_NOTHROW(drot::validate_problem(diag_problem()));
}

TEST_CASE("validate rejects marginals off the simplex") {
  auto p = diag_problem();
  p.p = {0.6, 0.6};
  try {
    drot::validate_problem(p);
    FAIL("expected marginal_not_simplex");
  } catch (const drot::Error& e) {
    CHECK(e.code() == Errc::marginal_not_simplex);
    CHECK(std::string(e.what()).find("1.2") != std::string::npos);
  }
}

TEST_CASE("validate rejects negative costs") {
  auto p = diag_problem();
  p.cost(0, 1) = -1.0;
  CHECK_THROWS_WITH_AS(drot::validate_problem(p), doctest::Contains("negative"),
                       drot::Error);
}

TEST_CASE("validate surfaces empty dimensions and non-finite entries") {
  TransportProblem<double> p;
  p.cost = Matrix<double>(0, 0);
  CHECK_THROWS_AS(drot::validate_problem(p), drot::Error);

  auto q = diag_problem();
  q.cost(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    drot::validate_problem(q);
    FAIL("expected non_finite_entry");
  } catch (const drot::Error& e) {
    CHECK(e.code() == Errc::non_finite_entry);
  }
}

TEST_CASE("validate renormalizes only on request") {
  auto p = diag_problem();
  p.p = {0.6, 0.6};
  drot::ValidateOptions opts;
  opts.renormalize = true;
  auto fixed = drot::validate_problem(p, opts);
  CHECK(fixed.p[0] == doctest::Approx(0.5));
  CHECK(fixed.p[1] == doctest::Approx(0.5));
}

TEST_CASE("residual report vanishes at an exact optimum with zero duals") {
  auto prob = diag_problem();
  TransportPlan<double> plan{Matrix<double>::from_rows({{0.5, 0}, {0, 0.5}})};
  DualCertificate<double> cert{{0, 0}, {0, 0}, 1.0};
  auto rep = drot::residual_report(prob, plan, cert);
  CHECK(rep.r_primal == doctest::Approx(0).epsilon(1e-14));
  CHECK(rep.r_dual == doctest::Approx(0).epsilon(1e-14));
  CHECK(rep.gap == doctest::Approx(0).epsilon(1e-14));
  CHECK(rep.objective == doctest::Approx(0).epsilon(1e-14));
}

TEST_CASE("product coupling is feasible") {
  TransportProblem<double> prob;
  prob.cost = Matrix<double>::from_rows({{0, 1}, {1, 0}});
  prob.p = {0.7, 0.3};
  prob.q = {0.4, 0.6};
  TransportPlan<double> plan{Matrix<double>(2, 2)};
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i) plan.x(i, j) = prob.p[i] * prob.q[j];
  DualCertificate<double> cert{{0, 0}, {0, 0}, 1.0};
  auto rep = drot::residual_report(prob, plan, cert);
  CHECK(rep.r_primal == doctest::Approx(0).epsilon(1e-14));
  CHECK(rep.objective == doctest::Approx(drot::objective(prob, plan)));
}

TEST_CASE("zero plan has unit primal residual on the symmetric instance") {
  // |Xe-p|^2 + |X'f-q|^2 = 4 * 0.25 for X = 0 and p = q = (1/2, 1/2).
  auto prob = diag_problem();
  TransportPlan<double> plan{Matrix<double>(2, 2, 0.0)};
  DualCertificate<double> cert{{0, 0}, {0, 0}, 1.0};
  auto rep = drot::residual_report(prob, plan, cert);
  CHECK(rep.r_primal == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("report matches a double-loop recomputation on random data") {
  drot::CounterRng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.next_below(5);
    const std::size_t n = 2 + rng.next_below(5);
    TransportProblem<double> prob;
    prob.cost = drot_tests::random_matrix(m, n, rng.next_u64());
    prob.p = drot_tests::random_simplex(m, rng.next_u64());
    prob.q = drot_tests::random_simplex(n, rng.next_u64());
    TransportPlan<double> plan{drot_tests::random_matrix(m, n, rng.next_u64())};
    DualCertificate<double> cert;
    cert.rho = 1;
    cert.mu.resize(m);
    cert.nu.resize(n);
    for (auto& v : cert.mu) v = rng.next_unit() - 0.5;
    for (auto& v : cert.nu) v = rng.next_unit() - 0.5;

    auto rep = drot::residual_report(prob, plan, cert);

    double row_sq = 0, col_sq = 0, obj = 0, dual_sq = 0, dual_val = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += plan.x(i, j);
      row_sq += (s - prob.p[i]) * (s - prob.p[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += plan.x(i, j);
      col_sq += (s - prob.q[j]) * (s - prob.q[j]);
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        obj += prob.cost(i, j) * plan.x(i, j);
        const double slack = cert.mu[i] + cert.nu[j] - prob.cost(i, j);
        if (slack > 0) dual_sq += slack * slack;
      }
    for (std::size_t i = 0; i < m; ++i) dual_val += prob.p[i] * cert.mu[i];
    for (std::size_t j = 0; j < n; ++j) dual_val += prob.q[j] * cert.nu[j];

    CHECK(rep.r_primal == doctest::Approx(std::sqrt(row_sq + col_sq)).epsilon(1e-12));
    CHECK(rep.r_dual == doctest::Approx(std::sqrt(dual_sq)).epsilon(1e-12));
    CHECK(rep.objective == doctest::Approx(obj).epsilon(1e-12));
    CHECK(rep.gap == doctest::Approx(std::abs(obj - dual_val)).epsilon(1e-12));

    // determinism: identical call, identical bits
    auto rep2 = drot::residual_report(prob, plan, cert);
    CHECK(rep.r_primal == rep2.r_primal);
    CHECK(rep.r_dual == rep2.r_dual);
    CHECK(rep.gap == rep2.gap);
    CHECK(rep.objective == rep2.objective);
  }
}

TEST_CASE("objective spec values") {
  auto prob = diag_problem();
  TransportPlan<double> diag{Matrix<double>::from_rows({{0.5, 0}, {0, 0.5}})};
  CHECK(drot::objective(prob, diag) == doctest::Approx(0));

  TransportProblem<double> ones;
  ones.cost = Matrix<double>(2, 2, 1.0);
  ones.p = {0.5, 0.5};
  ones.q = {0.5, 0.5};
  TransportPlan<double> any{Matrix<double>::from_rows({{0.1, 0.2}, {0.3, 0.4}})};
  CHECK(drot::objective(ones, any) == doctest::Approx(1.0));

  TransportPlan<double> skew{Matrix<double>::from_rows({{0.4, 0.3}, {0, 0.3}})};
  CHECK(drot::objective(prob, skew) == doctest::Approx(0.3));
}

TEST_CASE("objective is linear in the plan") {
  drot::CounterRng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    TransportProblem<double> prob;
    prob.cost = drot_tests::random_matrix(3, 4, rng.next_u64());
    prob.p = drot_tests::random_simplex(3, rng.next_u64());
    prob.q = drot_tests::random_simplex(4, rng.next_u64());
    TransportPlan<double> x1{drot_tests::random_matrix(3, 4, rng.next_u64())};
    TransportPlan<double> x2{drot_tests::random_matrix(3, 4, rng.next_u64())};
    const double a = rng.next_unit(), b = rng.next_unit();
    TransportPlan<double> mix{Matrix<double>(3, 4)};
    for (std::size_t k = 0; k < mix.x.size(); ++k)
      mix.x.data()[k] = a * x1.x.data()[k] + b * x2.x.data()[k];
    CHECK(drot::objective(prob, mix) ==
          doctest::Approx(a * drot::objective(prob, x1) +
                          b * drot::objective(prob, x2))
              .epsilon(1e-12));
  }
}

TEST_CASE("weak duality: zero residual triple pins the optimal value") {
  // For feasible plans and arbitrary duals the gap is nonnegative, and a
  // plan certified by (r_primal, r_dual, gap) ~ 0 attains the exact optimum.
  drot::CounterRng rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 2 + rng.next_below(7);
    const std::size_t n = 2 + rng.next_below(7);
    TransportProblem<double> prob;
    prob.cost = drot_tests::random_matrix(m, n, rng.next_u64());
    prob.p = drot_tests::random_simplex(m, rng.next_u64());
    prob.q = drot_tests::random_simplex(n, rng.next_u64());

    auto lp = drot::lp_exact(prob);
    TransportPlan<double> plan{lp.plan};
    DualCertificate<double> cert;
    cert.rho = 1;
    cert.mu.assign(lp.mu.begin(), lp.mu.end());
    cert.nu.assign(lp.nu.begin(), lp.nu.end());
    auto rep = drot::residual_report(prob, plan, cert);
    CHECK(rep.r_primal <= 1e-10);
    CHECK(rep.r_dual <= 1e-9);
    CHECK(rep.gap <= 1e-9);
    CHECK(std::abs(rep.objective - lp.objective) <= 1e-8);
  }
}

TEST_CASE("shape mismatches are rejected") {
  auto prob = diag_problem();
  TransportPlan<double> bad{Matrix<double>(3, 2, 0.0)};
  CHECK_THROWS_AS(drot::objective(prob, bad), drot::Error);
  DualCertificate<double> cert{{0, 0}, {0, 0}, 1.0};
  CHECK_THROWS_AS(drot::residual_report(prob, bad, cert), drot::Error);
}
