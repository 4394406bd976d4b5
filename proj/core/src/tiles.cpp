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

#include "drot/tiles.hpp"

#include <algorithm>

namespace drot {

TilePlan plan_tiles(std::size_t m, std::size_t n, std::size_t bs,
                    std::size_t ws, std::size_t workers) {
  TilePlan plan;
  plan.rows = m;
  plan.cols = n;
  plan.block_rows = std::max<std::size_t>(1, bs);
  plan.work_size = std::max<std::size_t>(1, ws);
  plan.workers = std::max<std::size_t>(1, workers);

  const std::size_t tc = plan.tile_cols();
  plan.grid_rows = (m + plan.block_rows - 1) / plan.block_rows;
  plan.grid_cols = (n + tc - 1) / tc;

  plan.tiles.reserve(plan.grid_rows * plan.grid_cols);
  for (std::size_t gc = 0; gc < plan.grid_cols; ++gc) {
    for (std::size_t gr = 0; gr < plan.grid_rows; ++gr) {
      TileRange t;
      t.grid_r = gr;
      t.grid_c = gc;
      t.r0 = gr * plan.block_rows;
      t.r1 = std::min(m, t.r0 + plan.block_rows);
      t.c0 = gc * tc;
      t.c1 = std::min(n, t.c0 + tc);
      plan.tiles.push_back(t);
    }
  }
  return plan;
}

}  // namespace drot
