// Copyright 2026 The drot Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DROT_PROBLEM_HPP_
#define DROT_PROBLEM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drot/errors.hpp"
#include "drot/matrix.hpp"

namespace drot {

// The problem instance: minimize <C, X> over plans X >= 0 with row sums p
// and column sums q. The all-ones vectors that pair with p and q are
// implicit everywhere; they are never materialized.
template <class T>
struct TransportProblem {
  Matrix<T> cost;     // m x n, nonnegative
  std::vector<T> p;   // length m, probability vector
  std::vector<T> q;   // length n, probability vector

  std::size_t m() const { return cost.rows(); }
  std::size_t n() const { return cost.cols(); }
};

template <class T>
struct TransportPlan {
  Matrix<T> x;  // m x n, nonnegative at solver termination
};

// Recovered dual pair and the penalty it was recovered under.
template <class T>
struct DualCertificate {
  std::vector<T> mu;  // length m
  std::vector<T> nu;  // length n
  T rho = T(1);
};

// The three stopping quantities plus the primal objective. A negative
// r_dual is the "not applicable" sentinel used by solvers that do not carry
// a dual certificate (see kResidualNotApplicable).
struct ResidualReport {
  double r_primal = 0;  // sqrt(|Xe-p|^2 + |X'f-q|^2)
  double r_dual = 0;    // |[mu e' + f nu' - C]_+|_F
  double gap = 0;       // |<C,X> - p'mu - q'nu|
  double objective = 0;
};

inline constexpr double kResidualNotApplicable = -1.0;

enum class SolveStatus { converged, max_iters, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct TraceRow {
  std::int64_t iter = 0;
  double r_primal = 0;
  double r_dual = 0;
  double gap = 0;
  double objective = 0;
  double ergodic_objective = 0;
  double fixed_point_residual = 0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  SolveStatus termination = SolveStatus::max_iters;
  std::int64_t iterations = 0;
  double wall_time_s = 0;
};

// -- validation ----------------------------------------------------------

struct ValidateOptions {
  bool renormalize = false;      // rescale marginals to sum exactly to one
  double simplex_tol = 1e-12;    // allowed |sum - 1|
};

namespace detail {

template <class T>
void check_marginal(const std::vector<T>& v, const char* name, double tol) {
  if (v.empty()) fail(Errc::empty_dimension, std::string(name) + " is empty");
  double sum = 0;
  for (T e : v) {
    if (!std::isfinite(static_cast<double>(e)))
      fail(Errc::non_finite_entry, std::string(name) + " has a non-finite entry");
    if (e < T(0))
      fail(Errc::marginal_not_simplex, std::string(name) + " has a negative entry");
    sum += static_cast<double>(e);
  }
  if (std::abs(sum - 1.0) > tol)
    fail(Errc::marginal_not_simplex,
         std::string(name) + " sums to " + std::to_string(sum));
}

}  // namespace detail

// Non-copying invariant check; throws on the first violation.
template <class T>
void check_problem(const TransportProblem<T>& problem,
                   double simplex_tol = 1e-12) {
  if (problem.m() == 0 || problem.n() == 0)
    fail(Errc::empty_dimension, "cost matrix has an empty dimension");
  if (problem.p.size() != problem.m() || problem.q.size() != problem.n())
    fail(Errc::shape_mismatch, "marginal lengths do not match the cost matrix");
  for (const T& c : problem.cost.flat()) {
    if (!std::isfinite(static_cast<double>(c)))
      fail(Errc::non_finite_entry, "cost matrix has a non-finite entry");
    if (c < T(0)) fail(Errc::negative_cost, "cost matrix has a negative entry");
  }
  detail::check_marginal(problem.p, "p", simplex_tol);
  detail::check_marginal(problem.q, "q", simplex_tol);
}

// Returns the problem unchanged when every invariant holds. Marginals are
// rescaled only under opts.renormalize; otherwise any deviation beyond the
// tolerance is an error.
template <class T>
TransportProblem<T> validate_problem(TransportProblem<T> problem,
                                     const ValidateOptions& opts = {}) {
  if (opts.renormalize) {
    for (std::vector<T>* v : {&problem.p, &problem.q}) {
      double sum = 0;
      for (T e : *v) sum += static_cast<double>(e);
      if (sum > 0)
        for (T& e : *v) e = static_cast<T>(static_cast<double>(e) / sum);
    }
  }
  check_problem(problem, opts.simplex_tol);
  return problem;
}

// -- diagnostics ---------------------------------------------------------

// <C, X>, accumulated in a fixed column-major order.
template <class T>
double objective(const TransportProblem<T>& problem,
                 const TransportPlan<T>& plan) {
  require_same_shape(problem.cost, plan.x, "objective: plan vs cost");
  double acc = 0;
  const T* c = problem.cost.data();
  const T* x = plan.x.data();
  for (std::size_t k = 0; k < plan.x.size(); ++k)
    acc += static_cast<double>(c[k]) * static_cast<double>(x[k]);
  return acc;
}

// Evaluates the full report. The dual slack mu e' + f nu' - C is consumed as
// a streaming reduction in storage order; it is never stored, so the result
// does not depend on any internal block size.
template <class T>
ResidualReport residual_report(const TransportProblem<T>& problem,
                               const TransportPlan<T>& plan,
                               const DualCertificate<T>& cert) {
  require_same_shape(problem.cost, plan.x, "residual_report: plan vs cost");
  if (cert.mu.size() != problem.m() || cert.nu.size() != problem.n())
    fail(Errc::shape_mismatch, "residual_report: dual lengths");

  const std::size_t m = problem.m();
  const std::size_t n = problem.n();

  ResidualReport rep;

  std::vector<double> row(m, 0.0);
  double obj = 0;
  double dual_sq = 0;
  double col_sq = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const T* xc = plan.x.col(j);
    const T* cc = problem.cost.col(j);
    const double nu_j = static_cast<double>(cert.nu[j]);
    double colsum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double x = static_cast<double>(xc[i]);
      const double c = static_cast<double>(cc[i]);
      colsum += x;
      row[i] += x;
      obj += c * x;
      const double slack = static_cast<double>(cert.mu[i]) + nu_j - c;
      if (slack > 0) dual_sq += slack * slack;
    }
    const double cd = colsum - static_cast<double>(problem.q[j]);
    col_sq += cd * cd;
  }
  double row_sq = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double rd = row[i] - static_cast<double>(problem.p[i]);
    row_sq += rd * rd;
  }

  double dual_value = 0;
  for (std::size_t i = 0; i < m; ++i)
    dual_value += static_cast<double>(problem.p[i]) * static_cast<double>(cert.mu[i]);
  for (std::size_t j = 0; j < n; ++j)
    dual_value += static_cast<double>(problem.q[j]) * static_cast<double>(cert.nu[j]);

  rep.objective = obj;
  rep.r_primal = std::sqrt(row_sq + col_sq);
  rep.r_dual = std::sqrt(dual_sq);
  rep.gap = std::abs(obj - dual_value);
  return rep;
}

}  // namespace drot

#endif  // DROT_PROBLEM_HPP_
