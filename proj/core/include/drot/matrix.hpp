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

#ifndef DROT_MATRIX_HPP_
#define DROT_MATRIX_HPP_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "drot/errors.hpp"

namespace drot {

// Dense column-major matrix. Column-major is the storage contract of the
// whole library: the tiled kernels stream columns, and the on-disk matrix
// format stores the same layout.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  // Row-major nested initializer, for small literals in tests and examples.
  static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    std::size_t m = rows.size();
    std::size_t n = m == 0 ? 0 : rows.begin()->size();
    Matrix out(m, n);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != n) fail(Errc::shape_mismatch, "ragged initializer");
      std::size_t j = 0;
      for (T v : row) out(i, j++) = v;
      ++i;
    }
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[j * rows_ + i];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T* col(std::size_t j) { return data_.data() + j * rows_; }
  const T* col(std::size_t j) const { return data_.data() + j * rows_; }

  std::span<T> flat() { return {data_.data(), data_.size()}; }
  std::span<const T> flat() const { return {data_.data(), data_.size()}; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k)
      out.data()[k] = static_cast<U>(data_[k]);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
void require_same_shape(const Matrix<T>& a, const Matrix<T>& b,
                        const char* where) {
  if (!a.same_shape(b)) fail(Errc::shape_mismatch, where);
}

// -- small vector kernels -----------------------------------------------
//
// Plain sequential loops; reduction order is fixed (ascending index), which
// is what the deterministic mode of the solvers relies on.

template <class T>
T vec_sum(std::span<const T> x) {
  T acc = T(0);
  for (T v : x) acc += v;
  return acc;
}

template <class T>
T vec_dot(std::span<const T> x, std::span<const T> y) {
  T acc = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
T vec_norm_sq(std::span<const T> x) {
  T acc = T(0);
  for (T v : x) acc += v * v;
  return acc;
}

template <class T>
bool all_finite(std::span<const T> x) {
  for (T v : x)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

// Row sums X e. Column-major, so this is an accumulation across columns.
template <class T>
std::vector<T> row_sums(const Matrix<T>& x) {
  std::vector<T> out(x.rows(), T(0));
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const T* c = x.col(j);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] += c[i];
  }
  return out;
}

// Column sums X^T f.
template <class T>
std::vector<T> col_sums(const Matrix<T>& x) {
  std::vector<T> out(x.cols(), T(0));
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const T* c = x.col(j);
    T acc = T(0);
    for (std::size_t i = 0; i < x.rows(); ++i) acc += c[i];
    out[j] = acc;
  }
  return out;
}

template <class T>
T frobenius_dot(const Matrix<T>& a, const Matrix<T>& b) {
  T acc = T(0);
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t k = 0; k < a.size(); ++k) acc += pa[k] * pb[k];
  return acc;
}

template <class T>
T frobenius_norm_sq(const Matrix<T>& a) {
  return vec_norm_sq(a.flat());
}

template <class T>
double frobenius_distance(const Matrix<T>& a, const Matrix<T>& b) {
  double acc = 0;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = static_cast<double>(pa[k]) - static_cast<double>(pb[k]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace drot

#endif  // DROT_MATRIX_HPP_
