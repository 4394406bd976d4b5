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
//
// Reference solvers. Deliberately plain, sequential and allocation-happy:
// these are the oracles the fast path is tested against, so they share no
// code with the single-array iteration.

#ifndef DROT_REFERENCE_HPP_
#define DROT_REFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "drot/errors.hpp"
#include "drot/matrix.hpp"
#include "drot/ops.hpp"
#include "drot/problem.hpp"
#include "drot/solver.hpp"

namespace drot {

// -- three-matrix Douglas-Rachford ----------------------------------------

template <class T>
struct DrReferenceState {
  Matrix<T> x, y, z;
};

template <class T>
DrReferenceState<T> dr_reference_init(const TransportProblem<T>& problem,
                                      const Matrix<T>* y0 = nullptr) {
  DrReferenceState<T> st;
  const std::size_t m = problem.m();
  const std::size_t n = problem.n();
  if (y0) {
    if (y0->rows() != m || y0->cols() != n)
      fail(Errc::shape_mismatch, "dr_reference_init: y0 shape");
    st.y = *y0;
  } else {
    st.y = Matrix<T>(m, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i)
        st.y(i, j) = problem.p[i] * problem.q[j];
  }
  st.x = Matrix<T>(m, n);
  st.z = Matrix<T>(m, n);
  return st;
}

template <class T>
void dr_reference_step(DrReferenceState<T>& st,
                       const TransportProblem<T>& problem, T rho) {
  st.x = prox_nonneg_linear(st.y, problem.cost, rho);
  Matrix<T> reflected(st.y.rows(), st.y.cols());
  for (std::size_t k = 0; k < st.y.size(); ++k)
    reflected.data()[k] = T(2) * st.x.data()[k] - st.y.data()[k];
  st.z = project_coupling(reflected, std::span<const T>(problem.p),
                          std::span<const T>(problem.q));
  for (std::size_t k = 0; k < st.y.size(); ++k) {
    st.y.data()[k] += st.z.data()[k] - st.x.data()[k];
    if (!std::isfinite(static_cast<double>(st.y.data()[k])))
      fail(Errc::non_finite_iterate, "dr_reference_step");
  }
}

// -- ADMM on the same split ------------------------------------------------
//
// Scaled ADMM for the x = z consensus form:
//   z_{k+1} = proj(x_k + rho w_k)
//   x_{k+1} = [z_{k+1} - rho w_k - rho C]_+
//   w_{k+1} = w_k + (x_{k+1} - z_{k+1}) / rho.
// Started from x_0 = [Y_0 - rho C]_+ and w_0 = (x_0 - Y_0)/rho, its x-iterates
// retrace the Douglas-Rachford x-sequence shifted by one index.

template <class T>
struct AdmmReferenceState {
  Matrix<T> x, w, z;
};

template <class T>
AdmmReferenceState<T> admm_reference_init(const TransportProblem<T>& problem,
                                          const Matrix<T>* x0 = nullptr,
                                          const Matrix<T>* w0 = nullptr) {
  AdmmReferenceState<T> st;
  const std::size_t m = problem.m();
  const std::size_t n = problem.n();
  if (x0) {
    if (x0->rows() != m || x0->cols() != n)
      fail(Errc::shape_mismatch, "admm_reference_init: x0 shape");
    st.x = *x0;
  } else {
    st.x = Matrix<T>(m, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i)
        st.x(i, j) = problem.p[i] * problem.q[j];
  }
  st.w = w0 ? *w0 : Matrix<T>(m, n, T(0));
  if (!st.w.same_shape(st.x))
    fail(Errc::shape_mismatch, "admm_reference_init: w0 shape");
  st.z = Matrix<T>(m, n);
  return st;
}

template <class T>
void admm_reference_step(AdmmReferenceState<T>& st,
                         const TransportProblem<T>& problem, T rho) {
  if (!(rho > T(0))) fail(Errc::non_positive_rho, "admm_reference_step");
  const std::size_t sz = st.x.size();
  Matrix<T> buf(st.x.rows(), st.x.cols());
  for (std::size_t k = 0; k < sz; ++k)
    buf.data()[k] = st.x.data()[k] + rho * st.w.data()[k];
  st.z = project_coupling(buf, std::span<const T>(problem.p),
                          std::span<const T>(problem.q));
  for (std::size_t k = 0; k < sz; ++k)
    buf.data()[k] = st.z.data()[k] - rho * st.w.data()[k];
  st.x = prox_nonneg_linear(buf, problem.cost, rho);
  for (std::size_t k = 0; k < sz; ++k) {
    st.w.data()[k] += (st.x.data()[k] - st.z.data()[k]) / rho;
    if (!std::isfinite(static_cast<double>(st.w.data()[k])))
      fail(Errc::non_finite_iterate, "admm_reference_step");
  }
}

// -- Sinkhorn baseline ------------------------------------------------------

template <class T>
struct SinkhornState {
  Matrix<T> kernel;  // K = exp(-C / eta)
  std::vector<T> u, v;
  T eta = T(0);
};

namespace detail {

template <class T>
bool positive_finite(std::span<const T> x) {
  for (T v : x) {
    const double d = static_cast<double>(v);
    if (!(d > 0) || !std::isfinite(d)) return false;
  }
  return true;
}

}  // namespace detail

// Plain (unstabilized) Sinkhorn iteration on the entropic surrogate. Any
// zero, infinite or NaN value in the kernel or the scalings terminates the
// run with numerical_failure status; this failure mode is part of the
// contract, not an internal error, so it is surfaced in the result rather
// than thrown.
template <class T>
SolveResult<T> sinkhorn_solve(const TransportProblem<T>& problem, T eta,
                              double tol, std::int64_t max_iters,
                              std::int64_t check_every = 10) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  if (!(eta > T(0))) fail(Errc::bad_config, "sinkhorn eta must be positive");
  const std::size_t m = problem.m();
  const std::size_t n = problem.n();
  for (T e : problem.p)
    if (!(e > T(0))) fail(Errc::zero_marginal, "sinkhorn requires p > 0");
  for (T e : problem.q)
    if (!(e > T(0))) fail(Errc::zero_marginal, "sinkhorn requires q > 0");

  SolveResult<T> result;
  result.status = SolveStatus::numerical_failure;
  auto finish = [&](SolveStatus status, const SinkhornState<T>& st,
                    std::int64_t iters, bool build_plan) {
    result.status = status;
    result.trace.termination = status;
    result.trace.iterations = iters;
    result.trace.wall_time_s =
        std::chrono::duration<double>(clock::now() - t_start).count();
    result.plan.x = Matrix<T>(m, n, T(0));
    result.cert.rho = eta;
    result.cert.mu.assign(m, T(0));
    result.cert.nu.assign(n, T(0));
    ResidualReport rep;
    if (build_plan) {
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
          result.plan.x(i, j) = st.u[i] * st.kernel(i, j) * st.v[j];
      bool duals_ok = true;
      for (std::size_t i = 0; i < m; ++i) {
        result.cert.mu[i] = eta * std::log(st.u[i]);
        duals_ok = duals_ok && std::isfinite(static_cast<double>(result.cert.mu[i]));
      }
      for (std::size_t j = 0; j < n; ++j) {
        result.cert.nu[j] = eta * std::log(st.v[j]);
        duals_ok = duals_ok && std::isfinite(static_cast<double>(result.cert.nu[j]));
      }
      rep = residual_report(problem, result.plan, result.cert);
      if (!duals_ok) {
        // No representable dual certificate for this run.
        rep.r_dual = kResidualNotApplicable;
        rep.gap = kResidualNotApplicable;
      }
    } else {
      rep.r_primal = rep.objective = std::numeric_limits<double>::quiet_NaN();
      rep.r_dual = rep.gap = kResidualNotApplicable;
    }
    result.report = rep;
    return result;
  };

  SinkhornState<T> st;
  st.eta = eta;
  st.kernel = Matrix<T>(m, n);
  for (std::size_t k = 0; k < st.kernel.size(); ++k) {
    const T kv = std::exp(-problem.cost.data()[k] / eta);
    st.kernel.data()[k] = kv;
    const double d = static_cast<double>(kv);
    if (!(d > 0) || !std::isfinite(d)) return finish(SolveStatus::numerical_failure, st, 0, false);
  }
  st.u.assign(m, T(1));
  st.v.assign(n, T(1));

  std::vector<T> kv(m), ktu(n);
  auto mul_kv = [&]() {
    for (std::size_t i = 0; i < m; ++i) kv[i] = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      const T* kc = st.kernel.col(j);
      const T vj = st.v[j];
      for (std::size_t i = 0; i < m; ++i) kv[i] += kc[i] * vj;
    }
  };
  auto mul_ktu = [&]() {
    for (std::size_t j = 0; j < n; ++j) {
      const T* kc = st.kernel.col(j);
      T acc = T(0);
      for (std::size_t i = 0; i < m; ++i) acc += kc[i] * st.u[i];
      ktu[j] = acc;
    }
  };

  std::int64_t k = 0;
  for (; k < max_iters; ++k) {
    mul_kv();
    for (std::size_t i = 0; i < m; ++i) st.u[i] = problem.p[i] / kv[i];
    if (!detail::positive_finite(std::span<const T>(st.u)))
      return finish(SolveStatus::numerical_failure, st, k + 1, false);
    mul_ktu();
    for (std::size_t j = 0; j < n; ++j) st.v[j] = problem.q[j] / ktu[j];
    if (!detail::positive_finite(std::span<const T>(st.v)))
      return finish(SolveStatus::numerical_failure, st, k + 1, false);

    if ((k + 1) % check_every == 0 || k + 1 == max_iters) {
      mul_kv();
      mul_ktu();
      double row_err = 0, col_err = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = static_cast<double>(st.u[i] * kv[i]) -
                         static_cast<double>(problem.p[i]);
        row_err += d * d;
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double d = static_cast<double>(st.v[j] * ktu[j]) -
                         static_cast<double>(problem.q[j]);
        col_err += d * d;
      }
      const double err = std::sqrt(row_err) + std::sqrt(col_err);
      if (!std::isfinite(err))
        return finish(SolveStatus::numerical_failure, st, k + 1, false);
      TraceRow row;
      row.iter = k + 1;
      row.r_primal = err;
      row.r_dual = kResidualNotApplicable;
      result.trace.rows.push_back(row);
      if (err <= tol) return finish(SolveStatus::converged, st, k + 1, true);
    }
  }
  return finish(SolveStatus::max_iters, st, k, true);
}

// -- exact LP oracle ---------------------------------------------------------
//
// Transportation simplex with a northwest-corner start and tree-structured
// duals. Exact within floating-point arithmetic at desk scale; certified by
// the optimality conditions rather than by construction.

struct LpSolution {
  double objective = 0;
  Matrix<double> plan;
  std::vector<double> mu, nu;
};

namespace detail {

class TransportSimplex {
 public:
  TransportSimplex(const Matrix<double>& cost, std::vector<double> p,
                   std::vector<double> q)
      : m_(cost.rows()), n_(cost.cols()), cost_(cost),
        p_(std::move(p)), q_(std::move(q)),
        basic_(m_ * n_, 0), flow_(m_ * n_, 0.0),
        row_adj_(m_), col_adj_(n_), u_(m_), v_(n_) {}

  LpSolution run() {
    northwest_start();
    const double cmax = max_abs_cost();
    const double tol = 1e-12 * std::max(1.0, cmax);
    // Dantzig pricing first; Bland's rule after a generous cap so that
    // degenerate instances cannot cycle.
    const std::int64_t dantzig_cap = 64 * static_cast<std::int64_t>(m_ + n_) *
                                     static_cast<std::int64_t>(m_ + n_);
    std::int64_t pivots = 0;
    for (;;) {
      compute_duals();
      std::size_t ei = 0, ej = 0;
      if (!price(tol, pivots > dantzig_cap, ei, ej)) break;
      pivot(ei, ej);
      if (++pivots > dantzig_cap * 64)
        fail(Errc::too_large, "transportation simplex pivot cap exceeded");
    }
    return extract();
  }

 private:
  std::size_t idx(std::size_t i, std::size_t j) const { return j * m_ + i; }

  double max_abs_cost() const {
    double cmax = 0;
    for (double c : cost_.flat()) cmax = std::max(cmax, std::abs(c));
    return cmax;
  }

  void add_basic(std::size_t i, std::size_t j, double f) {
    basic_[idx(i, j)] = 1;
    flow_[idx(i, j)] = f;
    row_adj_[i].push_back(j);
    col_adj_[j].push_back(i);
  }

  void remove_basic(std::size_t i, std::size_t j) {
    basic_[idx(i, j)] = 0;
    flow_[idx(i, j)] = 0;
    auto& ra = row_adj_[i];
    ra.erase(std::find(ra.begin(), ra.end(), j));
    auto& ca = col_adj_[j];
    ca.erase(std::find(ca.begin(), ca.end(), i));
  }

  void northwest_start() {
    std::vector<double> a = p_, b = q_;
    std::size_t i = 0, j = 0;
    for (;;) {
      const double t = std::min(a[i], b[j]);
      add_basic(i, j, t);
      a[i] -= t;
      b[j] -= t;
      if (i == m_ - 1 && j == n_ - 1) break;
      // Advance past the exhausted side; on ties prefer the row so that the
      // walk always stays inside the grid.
      if (a[i] <= b[j] && i < m_ - 1)
        ++i;
      else if (j < n_ - 1)
        ++j;
      else
        ++i;
    }
  }

  void compute_duals() {
    // The basis is a spanning tree of the bipartite row/column graph; fix
    // u_0 = 0 and propagate u_i + v_j = c_ij over basic cells.
    std::fill(u_.begin(), u_.end(), std::numeric_limits<double>::quiet_NaN());
    std::fill(v_.begin(), v_.end(), std::numeric_limits<double>::quiet_NaN());
    std::deque<std::size_t> queue;  // rows: [0, m), cols: m + j
    u_[0] = 0;
    queue.push_back(0);
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      if (node < m_) {
        const std::size_t i = node;
        for (std::size_t j : row_adj_[i])
          if (std::isnan(v_[j])) {
            v_[j] = cost_(i, j) - u_[i];
            queue.push_back(m_ + j);
          }
      } else {
        const std::size_t j = node - m_;
        for (std::size_t i : col_adj_[j])
          if (std::isnan(u_[i])) {
            u_[i] = cost_(i, j) - v_[j];
            queue.push_back(i);
          }
      }
    }
  }

  bool price(double tol, bool bland, std::size_t& ei, std::size_t& ej) const {
    double best = -tol;
    bool found = false;
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < m_; ++i) {
        if (basic_[idx(i, j)]) continue;
        const double rc = cost_(i, j) - u_[i] - v_[j];
        if (rc < -tol) {
          if (bland) {
            ei = i;
            ej = j;
            return true;
          }
          if (rc < best) {
            best = rc;
            ei = i;
            ej = j;
            found = true;
          }
        }
      }
    return found;
  }

  // Unique tree path from row node ei to column node ej; the entering cell
  // closes it into the pivot cycle.
  std::vector<std::pair<std::size_t, std::size_t>> find_cycle(
      std::size_t ei, std::size_t ej) const {
    const std::size_t nodes = m_ + n_;
    std::vector<std::int64_t> parent(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::deque<std::size_t> queue;
    seen[ei] = 1;
    queue.push_back(ei);
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      if (node == m_ + ej) break;
      if (node < m_) {
        for (std::size_t j : row_adj_[node])
          if (!seen[m_ + j]) {
            seen[m_ + j] = 1;
            parent[m_ + j] = static_cast<std::int64_t>(node);
            queue.push_back(m_ + j);
          }
      } else {
        for (std::size_t i : col_adj_[node - m_])
          if (!seen[i]) {
            seen[i] = 1;
            parent[i] = static_cast<std::int64_t>(node);
            queue.push_back(i);
          }
      }
    }
    // Walk back from ej to ei, collecting the basic cells on the path.
    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::size_t node = m_ + ej;
    while (node != ei) {
      const std::size_t par = static_cast<std::size_t>(parent[node]);
      if (node >= m_)
        path.emplace_back(par, node - m_);  // row par -> col node
      else
        path.emplace_back(node, par - m_);  // col par -> row node
      node = par;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void pivot(std::size_t ei, std::size_t ej) {
    auto path = find_cycle(ei, ej);
    // Entering cell takes +theta; walking from the entering cell, cells
    // alternate -, +, -, ... along the path returned row-first.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave_k = 0;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double f = flow_[idx(path[k].first, path[k].second)];
      if (f < theta ||
          (f == theta &&
           idx(path[k].first, path[k].second) <
               idx(path[leave_k].first, path[leave_k].second))) {
        theta = f;
        leave_k = k;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      const std::size_t id = idx(path[k].first, path[k].second);
      flow_[id] += (k % 2 == 0) ? -theta : theta;
    }
    const auto leave = path[leave_k];
    remove_basic(leave.first, leave.second);
    add_basic(ei, ej, theta);
  }

  LpSolution extract() {
    compute_duals();
    LpSolution sol;
    sol.plan = Matrix<double>(m_, n_, 0.0);
    double obj = 0;
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < m_; ++i)
        if (basic_[idx(i, j)]) {
          const double f = std::max(flow_[idx(i, j)], 0.0);
          sol.plan(i, j) = f;
          obj += cost_(i, j) * f;
        }
    sol.objective = obj;
    sol.mu = u_;
    sol.nu = v_;
    return sol;
  }

  std::size_t m_, n_;
  const Matrix<double>& cost_;
  std::vector<double> p_, q_;
  std::vector<char> basic_;
  std::vector<double> flow_;
  std::vector<std::vector<std::size_t>> row_adj_;
  std::vector<std::vector<std::size_t>> col_adj_;
  std::vector<double> u_, v_;
};

}  // namespace detail

inline constexpr std::size_t kLpExactCellCap = 400;

// Exact primal-dual solution at desk scale. The returned pair satisfies the
// optimality conditions (feasibility, dual feasibility, complementary
// slackness) to oracle tolerance; tests certify this rather than trusting
// the pivoting.
inline LpSolution lp_exact(const TransportProblem<double>& problem) {
  check_problem(problem, 1e-9);
  if (problem.m() * problem.n() > kLpExactCellCap)
    fail(Errc::too_large, "lp_exact is capped at 400 cells");
  detail::TransportSimplex simplex(problem.cost, problem.p, problem.q);
  return simplex.run();
}

template <class T>
LpSolution lp_exact(const TransportProblem<T>& problem) {
  TransportProblem<double> dp;
  dp.cost = problem.cost.template cast<double>();
  dp.p.assign(problem.p.begin(), problem.p.end());
  dp.q.assign(problem.q.begin(), problem.q.end());
  return lp_exact(dp);
}

}  // namespace drot

#endif  // DROT_REFERENCE_HPP_
