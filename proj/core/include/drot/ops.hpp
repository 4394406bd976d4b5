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

#ifndef DROT_OPS_HPP_
#define DROT_OPS_HPP_

#include <cassert>
#include <cmath>
#include <utility>
#include <vector>

#include "drot/errors.hpp"
#include "drot/matrix.hpp"

namespace drot {

// Work vectors of the coupling projection. gamma is the total-mass
// correction; the row and column expressions for it agree analytically, so
// the second reduction is only spent on a debug assertion.
template <class T>
struct CouplingProjectionScratch {
  std::vector<T> row_defect;  // Xe - p
  std::vector<T> col_defect;  // X'f - q
  T gamma = T(0);
};

// Euclidean projection onto {Z : Ze = p, Z'f = q}. Two matrix-vector
// reductions followed by one elementwise pass; the rank-one corrections are
// applied per entry, no outer product is ever stored.
template <class T>
Matrix<T> project_coupling(const Matrix<T>& x, std::span<const T> p,
                           std::span<const T> q,
                           CouplingProjectionScratch<T>* scratch = nullptr) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (p.size() != m || q.size() != n)
    fail(Errc::shape_mismatch, "project_coupling: marginal lengths");

  CouplingProjectionScratch<T> local;
  CouplingProjectionScratch<T>& s = scratch ? *scratch : local;

  s.row_defect = row_sums(x);
  for (std::size_t i = 0; i < m; ++i) s.row_defect[i] -= p[i];
  s.col_defect = col_sums(x);
  for (std::size_t j = 0; j < n; ++j) s.col_defect[j] -= q[j];

  s.gamma = vec_sum(std::span<const T>(s.row_defect)) / static_cast<T>(m + n);
#ifndef NDEBUG
  {
    T gamma_col =
        vec_sum(std::span<const T>(s.col_defect)) / static_cast<T>(m + n);
    assert(std::abs(static_cast<double>(s.gamma - gamma_col)) <= 1e-10);
  }
#endif

  const T inv_n = T(1) / static_cast<T>(n);
  const T inv_m = T(1) / static_cast<T>(m);
  Matrix<T> out(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const T* xc = x.col(j);
    T* oc = out.col(j);
    const T col_term = (s.col_defect[j] - s.gamma) * inv_m;
    for (std::size_t i = 0; i < m; ++i)
      oc[i] = xc[i] - (s.row_defect[i] - s.gamma) * inv_n - col_term;
  }
  return out;
}

// prox of <C, .> plus the nonnegativity indicator: [y - rho C]_+.
template <class T>
Matrix<T> prox_nonneg_linear(const Matrix<T>& y, const Matrix<T>& cost, T rho) {
  require_same_shape(y, cost, "prox_nonneg_linear");
  if (!(rho > T(0))) fail(Errc::non_positive_rho, "prox_nonneg_linear");
  Matrix<T> out(y.rows(), y.cols());
  const T* py = y.data();
  const T* pc = cost.data();
  T* po = out.data();
  for (std::size_t k = 0; k < y.size(); ++k) {
    T t = py[k] - rho * pc[k];
    po[k] = t > T(0) ? t : T(0);
  }
  return out;
}

// Projection of a stacked pair (y, x) onto the range of X |-> (Xe, X'f):
// subtract alpha from every y entry and add it to every x entry, with
// alpha = (sum y - sum x)/(m+n). Afterwards both sides carry equal mass.
template <class T>
std::pair<std::vector<T>, std::vector<T>> project_range(std::span<const T> y,
                                                        std::span<const T> x) {
  const std::size_t m = y.size();
  const std::size_t n = x.size();
  const T alpha = (vec_sum(y) - vec_sum(x)) / static_cast<T>(m + n);
  std::vector<T> y_out(y.begin(), y.end());
  std::vector<T> x_out(x.begin(), x.end());
  for (T& v : y_out) v -= alpha;
  for (T& v : x_out) v += alpha;
  return {std::move(y_out), std::move(x_out)};
}

}  // namespace drot

#endif  // DROT_OPS_HPP_
