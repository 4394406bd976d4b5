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

#ifndef DROT_FUSED_HPP_
#define DROT_FUSED_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "drot/errors.hpp"
#include "drot/matrix.hpp"
#include "drot/threadpool.hpp"
#include "drot/tiles.hpp"

namespace drot {

// Element-granular accounting of large-array traffic. Vector traffic and
// per-tile partial buffers are excluded, matching the budget the kernel is
// designed around.
struct MemoryCounters {
  std::uint64_t passes = 0;
  std::uint64_t xy_elems_read = 0;
  std::uint64_t xy_elems_written = 0;
  std::uint64_t cost_elems_read = 0;
};

// Everything one sweep produces besides the updated array itself.
template <class T>
struct FusedPassOutput {
  std::vector<T> row_sums;  // u = X+ e
  std::vector<T> col_sums;  // v = X+' f
  T cost_dot = T(0);        // <C, X+>
  bool cost_valid = false;  // false on the C-skipping passes
  T max_abs = T(0);         // max |pre-clamp update value|
  bool nonfinite = false;   // a non-finite update value was produced

  // Stopping-criterion reductions folded into the same sweep.
  T dual_sq = T(0);  // sum over ij of [phi_i + varphi_j - rho c_ij]_+^2
  bool dual_valid = false;
  T dx_sq = T(0);  // |X+ - X|_F^2
  bool dx_valid = false;
  T prev_cost_dot = T(0);  // <C, X> of the incoming iterate
  bool prev_cost_valid = false;

  T total_mass() const { return vec_sum(std::span<const T>(row_sums)); }
};

// The iterate array plus the fold state of the skip-C scheme. When
// cost_folded is set the array stores X - rho C instead of X.
template <class T>
struct FusedArray {
  Matrix<T> values;
  bool cost_folded = false;
};

struct PassOptions {
  // Association order of the elementwise update. Parity 0 evaluates
  // ((x + phi_i) + varphi_j) - rho*c, parity 1 evaluates
  // ((x - rho*c) + phi_i) + varphi_j. The skip-C scheme is forced into the
  // parity-1 association on its C-skipping passes, so a plain pass that
  // alternates parities reproduces its iterates bit for bit.
  int parity = 0;
  bool want_dual = false;
  bool want_dx = false;
  bool deterministic = true;
  MemoryCounters* counters = nullptr;
};

namespace detail {

template <class T>
struct TileScalars {
  T cost = T(0);
  T prev_cost = T(0);
  T dual = T(0);
  T dx = T(0);
  T max_abs = T(0);
  bool nonfinite = false;
};

}  // namespace detail

// Executes the update X+ = [X + phi e' + f varphi' - rho C]_+ over a tile
// plan, reading and writing each element of the array exactly once per pass
// and accumulating the row sums, column sums, <C,X+> and the optional
// stopping reductions on the fly.
//
// Reduction layout: every tile accumulates partial sums locally; partials
// are merged in tile-index order, so results are identical no matter how
// the scheduler assigns tiles to workers. In free-order mode (deterministic
// = false) partials are kept per worker and merged in completion order
// instead.
template <class T>
class FusedEngine {
 public:
  explicit FusedEngine(TilePlan plan, std::shared_ptr<ThreadPool> pool = nullptr)
      : plan_(std::move(plan)),
        pool_(pool ? std::move(pool)
                   : std::make_shared<ThreadPool>(plan_.workers)) {
    const std::size_t m = plan_.rows;
    const std::size_t n = plan_.cols;
    u_partials_.assign(plan_.grid_cols * m, T(0));
    v_partials_.assign(plan_.grid_rows * n, T(0));
    tile_scalars_.assign(plan_.tiles.size(), {});
    worker_u_.assign(pool_->workers() * m, T(0));
    worker_v_.assign(pool_->workers() * n, T(0));
    worker_scalars_.assign(pool_->workers(), {});
  }

  const TilePlan& plan() const { return plan_; }
  ThreadPool& pool() { return *pool_; }

  FusedPassOutput<T> fused_pass(Matrix<T>& xy, const Matrix<T>& cost,
                                std::span<const T> row_shift,
                                std::span<const T> col_shift, T rho,
                                const PassOptions& opts = {}) {
    check_shapes(xy, cost, row_shift, col_shift);
    return run_pass(xy, &cost, row_shift, col_shift, rho,
                    /*fold_write=*/false, /*input_folded=*/false, opts);
  }

  // Claim-1 alternation. A fold pass reads C, writes X+ - rho C and, since
  // the incoming array holds true values, also recovers <C, X> for the
  // iterate produced by the previous (C-skipping) pass. A non-fold pass
  // consumes the folded array without touching C at all.
  FusedPassOutput<T> fused_pass_skip_cost(FusedArray<T>& xy,
                                          const Matrix<T>& cost,
                                          std::span<const T> row_shift,
                                          std::span<const T> col_shift, T rho,
                                          bool fold, PassOptions opts = {}) {
    check_shapes(xy.values, cost, row_shift, col_shift);
    if (fold == xy.cost_folded)
      fail(Errc::fold_state_mismatch,
           fold ? "array already stores X - rho C"
                : "array does not store X - rho C");
    opts.parity = fold ? 0 : 1;
    auto out = run_pass(xy.values, &cost, row_shift, col_shift, rho,
                        /*fold_write=*/fold, /*input_folded=*/!fold, opts);
    xy.cost_folded = fold;
    return out;
  }

  // Same arithmetic split into four separate sweeps: elementwise update,
  // then row sums, then column sums, then the cost inner product. Baseline
  // for the fusion tests and benchmarks; shares the tile plan and merge
  // order with the fused pass, so in deterministic mode the two agree
  // bitwise.
  FusedPassOutput<T> unfused_pass(Matrix<T>& xy, const Matrix<T>& cost,
                                  std::span<const T> row_shift,
                                  std::span<const T> col_shift, T rho,
                                  const PassOptions& opts = {});

 private:
  void check_shapes(const Matrix<T>& xy, const Matrix<T>& cost,
                    std::span<const T> row_shift,
                    std::span<const T> col_shift) const {
    if (xy.rows() != plan_.rows || xy.cols() != plan_.cols)
      fail(Errc::shape_mismatch, "fused pass: array vs tile plan");
    if (!xy.same_shape(cost)) fail(Errc::shape_mismatch, "fused pass: cost");
    if (row_shift.size() != plan_.rows || col_shift.size() != plan_.cols)
      fail(Errc::shape_mismatch, "fused pass: shift vectors");
  }

  FusedPassOutput<T> run_pass(Matrix<T>& xy, const Matrix<T>* cost,
                              std::span<const T> row_shift,
                              std::span<const T> col_shift, T rho,
                              bool fold_write, bool input_folded,
                              const PassOptions& opts);

  template <class TileFn>
  void dispatch(const TileFn& fn) {
    pool_->run(plan_.tiles.size(),
               [&](std::size_t t, std::size_t w) { fn(plan_.tiles[t], t, w); });
  }

  TilePlan plan_;
  std::shared_ptr<ThreadPool> pool_;

  // per-tile partial strips (deterministic mode)
  std::vector<T> u_partials_;  // grid_cols strips of length m
  std::vector<T> v_partials_;  // grid_rows strips of length n
  std::vector<detail::TileScalars<T>> tile_scalars_;

  // per-worker accumulators (free-order mode)
  std::vector<T> worker_u_;
  std::vector<T> worker_v_;
  std::vector<detail::TileScalars<T>> worker_scalars_;
};

// -- implementation ------------------------------------------------------

template <class T>
FusedPassOutput<T> FusedEngine<T>::run_pass(Matrix<T>& xy,
                                            const Matrix<T>* cost,
                                            std::span<const T> row_shift,
                                            std::span<const T> col_shift, T rho,
                                            bool fold_write, bool input_folded,
                                            const PassOptions& opts) {
  const std::size_t m = plan_.rows;
  const std::size_t n = plan_.cols;
  const bool reads_cost = !input_folded;  // folded input already carries -rho C
  const bool det = opts.deterministic;

  FusedPassOutput<T> out;
  out.row_sums.assign(m, T(0));
  out.col_sums.assign(n, T(0));

  const bool want_dual = opts.want_dual && reads_cost;
  const bool want_dx = opts.want_dx && !input_folded;
  const bool want_prev = reads_cost && !input_folded;

  if (!det) {
    std::fill(worker_u_.begin(), worker_u_.end(), T(0));
    std::fill(worker_v_.begin(), worker_v_.end(), T(0));
    std::fill(worker_scalars_.begin(), worker_scalars_.end(),
              detail::TileScalars<T>{});
  }

  auto tile_body = [&](const TileRange& tile, std::size_t tile_idx,
                       std::size_t worker) {
    T* u_strip = det ? u_partials_.data() + tile.grid_c * m
                     : worker_u_.data() + worker * m;
    T* v_strip = det ? v_partials_.data() + tile.grid_r * n
                     : worker_v_.data() + worker * n;
    detail::TileScalars<T> sc;

    if (det)
      for (std::size_t i = tile.r0; i < tile.r1; ++i) u_strip[i] = T(0);

    for (std::size_t j = tile.c0; j < tile.c1; ++j) {
      T* xc = xy.col(j);
      const T* cc = reads_cost ? cost->col(j) : nullptr;
      const T vj = col_shift[j];
      T colsum = T(0);
      for (std::size_t i = tile.r0; i < tile.r1; ++i) {
        const T x = xc[i];
        T t;
        T e = T(0);
        T c = T(0);
        if (reads_cost) {
          c = cc[i];
          e = rho * c;
          if (opts.parity == 0)
            t = ((x + row_shift[i]) + vj) - e;
          else
            t = ((x - e) + row_shift[i]) + vj;
        } else {
          t = (x + row_shift[i]) + vj;
        }
        const T xp = t > T(0) ? t : T(0);
        xc[i] = fold_write ? xp - e : xp;

        u_strip[i] += xp;
        colsum += xp;
        if (reads_cost) {
          sc.cost += c * xp;
          if (want_prev) sc.prev_cost += c * x;
          if (want_dual) {
            const T d = (row_shift[i] + vj) - e;
            if (d > T(0)) sc.dual += d * d;
          }
        }
        if (want_dx) {
          const T dx = xp - x;
          sc.dx += dx * dx;
        }
        const T at = std::abs(t);
        if (at > sc.max_abs) sc.max_abs = at;
        if (!std::isfinite(static_cast<double>(t))) sc.nonfinite = true;
      }
      if (det)
        v_strip[j] = colsum;
      else
        v_strip[j] += colsum;
    }

    if (det) {
      tile_scalars_[tile_idx] = sc;
    } else {
      auto& w = worker_scalars_[worker];
      w.cost += sc.cost;
      w.prev_cost += sc.prev_cost;
      w.dual += sc.dual;
      w.dx += sc.dx;
      if (sc.max_abs > w.max_abs) w.max_abs = sc.max_abs;
      w.nonfinite = w.nonfinite || sc.nonfinite;
    }
  };

  dispatch(tile_body);
  if (opts.counters) {
    opts.counters->passes += 1;
    opts.counters->xy_elems_read += m * n;
    opts.counters->xy_elems_written += m * n;
    if (reads_cost) opts.counters->cost_elems_read += m * n;
  }

  detail::TileScalars<T> total;
  if (det) {
    for (std::size_t gc = 0; gc < plan_.grid_cols; ++gc) {
      const T* strip = u_partials_.data() + gc * m;
      for (std::size_t i = 0; i < m; ++i) out.row_sums[i] += strip[i];
    }
    for (std::size_t gr = 0; gr < plan_.grid_rows; ++gr) {
      const T* strip = v_partials_.data() + gr * n;
      for (std::size_t j = 0; j < n; ++j) out.col_sums[j] += strip[j];
    }
    for (const auto& sc : tile_scalars_) {
      total.cost += sc.cost;
      total.prev_cost += sc.prev_cost;
      total.dual += sc.dual;
      total.dx += sc.dx;
      if (sc.max_abs > total.max_abs) total.max_abs = sc.max_abs;
      total.nonfinite = total.nonfinite || sc.nonfinite;
    }
  } else {
    for (std::size_t w = 0; w < pool_->workers(); ++w) {
      const T* us = worker_u_.data() + w * m;
      const T* vs = worker_v_.data() + w * n;
      for (std::size_t i = 0; i < m; ++i) out.row_sums[i] += us[i];
      for (std::size_t j = 0; j < n; ++j) out.col_sums[j] += vs[j];
      const auto& sc = worker_scalars_[w];
      total.cost += sc.cost;
      total.prev_cost += sc.prev_cost;
      total.dual += sc.dual;
      total.dx += sc.dx;
      if (sc.max_abs > total.max_abs) total.max_abs = sc.max_abs;
      total.nonfinite = total.nonfinite || sc.nonfinite;
    }
  }

  out.cost_dot = total.cost;
  out.cost_valid = reads_cost;
  out.max_abs = total.max_abs;
  out.nonfinite = total.nonfinite;
  out.dual_sq = total.dual;
  out.dual_valid = want_dual;
  out.dx_sq = total.dx;
  out.dx_valid = want_dx;
  out.prev_cost_dot = total.prev_cost;
  out.prev_cost_valid = want_prev;
  return out;
}

template <class T>
FusedPassOutput<T> FusedEngine<T>::unfused_pass(Matrix<T>& xy,
                                                const Matrix<T>& cost,
                                                std::span<const T> row_shift,
                                                std::span<const T> col_shift,
                                                T rho, const PassOptions& opts) {
  check_shapes(xy, cost, row_shift, col_shift);
  const std::size_t m = plan_.rows;
  const std::size_t n = plan_.cols;
  const bool det = opts.deterministic;

  FusedPassOutput<T> out;
  out.row_sums.assign(m, T(0));
  out.col_sums.assign(n, T(0));

  // Sweep 1: elementwise update (plus the reductions that need the old
  // value or the cost entry in hand: dx, dual slack, previous cost).
  auto update_body = [&](const TileRange& tile, std::size_t tile_idx,
                         std::size_t worker) {
    detail::TileScalars<T> sc;
    for (std::size_t j = tile.c0; j < tile.c1; ++j) {
      T* xc = xy.col(j);
      const T* cc = cost.col(j);
      const T vj = col_shift[j];
      for (std::size_t i = tile.r0; i < tile.r1; ++i) {
        const T x = xc[i];
        const T c = cc[i];
        const T e = rho * c;
        T t;
        if (opts.parity == 0)
          t = ((x + row_shift[i]) + vj) - e;
        else
          t = ((x - e) + row_shift[i]) + vj;
        const T xp = t > T(0) ? t : T(0);
        xc[i] = xp;
        if (opts.want_dx) {
          const T dx = xp - x;
          sc.dx += dx * dx;
        }
        if (opts.want_dual) {
          const T d = (row_shift[i] + vj) - e;
          if (d > T(0)) sc.dual += d * d;
        }
        sc.prev_cost += c * x;
        const T at = std::abs(t);
        if (at > sc.max_abs) sc.max_abs = at;
        if (!std::isfinite(static_cast<double>(t))) sc.nonfinite = true;
      }
    }
    if (det) {
      tile_scalars_[tile_idx] = sc;
    } else {
      auto& w = worker_scalars_[worker];
      w.dx += sc.dx;
      w.dual += sc.dual;
      w.prev_cost += sc.prev_cost;
      if (sc.max_abs > w.max_abs) w.max_abs = sc.max_abs;
      w.nonfinite = w.nonfinite || sc.nonfinite;
    }
  };
  if (!det)
    std::fill(worker_scalars_.begin(), worker_scalars_.end(),
              detail::TileScalars<T>{});
  dispatch(update_body);
  if (opts.counters) {
    opts.counters->xy_elems_read += m * n;
    opts.counters->xy_elems_written += m * n;
    opts.counters->cost_elems_read += m * n;
  }
  detail::TileScalars<T> total;
  {
    const auto& parts = det ? tile_scalars_ : worker_scalars_;
    const std::size_t cnt = det ? plan_.tiles.size() : pool_->workers();
    for (std::size_t k = 0; k < cnt; ++k) {
      const auto& sc = parts[k];
      total.dx += sc.dx;
      total.dual += sc.dual;
      total.prev_cost += sc.prev_cost;
      if (sc.max_abs > total.max_abs) total.max_abs = sc.max_abs;
      total.nonfinite = total.nonfinite || sc.nonfinite;
    }
  }

  // Sweep 2: row sums.
  auto rows_body = [&](const TileRange& tile, std::size_t, std::size_t worker) {
    T* strip = det ? u_partials_.data() + tile.grid_c * m
                   : worker_u_.data() + worker * m;
    if (det)
      for (std::size_t i = tile.r0; i < tile.r1; ++i) strip[i] = T(0);
    for (std::size_t j = tile.c0; j < tile.c1; ++j) {
      const T* xc = xy.col(j);
      for (std::size_t i = tile.r0; i < tile.r1; ++i) strip[i] += xc[i];
    }
  };
  if (!det) std::fill(worker_u_.begin(), worker_u_.end(), T(0));
  dispatch(rows_body);
  if (opts.counters) opts.counters->xy_elems_read += m * n;
  if (det) {
    for (std::size_t gc = 0; gc < plan_.grid_cols; ++gc) {
      const T* strip = u_partials_.data() + gc * m;
      for (std::size_t i = 0; i < m; ++i) out.row_sums[i] += strip[i];
    }
  } else {
    for (std::size_t w = 0; w < pool_->workers(); ++w) {
      const T* strip = worker_u_.data() + w * m;
      for (std::size_t i = 0; i < m; ++i) out.row_sums[i] += strip[i];
    }
  }

  // Sweep 3: column sums.
  auto cols_body = [&](const TileRange& tile, std::size_t, std::size_t worker) {
    T* strip = det ? v_partials_.data() + tile.grid_r * n
                   : worker_v_.data() + worker * n;
    for (std::size_t j = tile.c0; j < tile.c1; ++j) {
      const T* xc = xy.col(j);
      T colsum = T(0);
      for (std::size_t i = tile.r0; i < tile.r1; ++i) colsum += xc[i];
      if (det)
        strip[j] = colsum;
      else
        strip[j] += colsum;
    }
  };
  if (!det) std::fill(worker_v_.begin(), worker_v_.end(), T(0));
  dispatch(cols_body);
  if (opts.counters) opts.counters->xy_elems_read += m * n;
  if (det) {
    for (std::size_t gr = 0; gr < plan_.grid_rows; ++gr) {
      const T* strip = v_partials_.data() + gr * n;
      for (std::size_t j = 0; j < n; ++j) out.col_sums[j] += strip[j];
    }
  } else {
    for (std::size_t w = 0; w < pool_->workers(); ++w) {
      const T* strip = worker_v_.data() + w * n;
      for (std::size_t j = 0; j < n; ++j) out.col_sums[j] += strip[j];
    }
  }

  // Sweep 4: cost inner product.
  std::vector<T> dot_parts(det ? plan_.tiles.size() : pool_->workers(), T(0));
  auto dot_body = [&](const TileRange& tile, std::size_t tile_idx,
                      std::size_t worker) {
    T acc = T(0);
    for (std::size_t j = tile.c0; j < tile.c1; ++j) {
      const T* xc = xy.col(j);
      const T* cc = cost.col(j);
      for (std::size_t i = tile.r0; i < tile.r1; ++i) acc += cc[i] * xc[i];
    }
    if (det)
      dot_parts[tile_idx] = acc;
    else
      dot_parts[worker] += acc;
  };
  dispatch(dot_body);
  for (T p : dot_parts) out.cost_dot += p;

  if (opts.counters) {
    opts.counters->passes += 1;
    opts.counters->xy_elems_read += m * n;
    opts.counters->cost_elems_read += m * n;
  }

  out.cost_valid = true;
  out.max_abs = total.max_abs;
  out.nonfinite = total.nonfinite;
  out.dual_sq = total.dual;
  out.dual_valid = opts.want_dual;
  out.dx_sq = total.dx;
  out.dx_valid = opts.want_dx;
  out.prev_cost_dot = total.prev_cost;
  out.prev_cost_valid = true;
  return out;
}

}  // namespace drot

#endif  // DROT_FUSED_HPP_
