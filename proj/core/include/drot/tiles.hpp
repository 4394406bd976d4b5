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

#ifndef DROT_TILES_HPP_
#define DROT_TILES_HPP_

#include <cstddef>
#include <vector>

namespace drot {

struct TileRange {
  std::size_t r0 = 0, r1 = 0;  // row range [r0, r1)
  std::size_t c0 = 0, c1 = 0;  // column range [c0, c1)
  std::size_t grid_r = 0;      // position in the tile grid
  std::size_t grid_c = 0;

  std::size_t rows() const { return r1 - r0; }
  std::size_t cols() const { return c1 - c0; }
  std::size_t size() const { return rows() * cols(); }
};

// 2D decomposition of an m x n index space into blocks of block_rows rows
// and work_size * block_rows columns. Corner tiles may be smaller. Tiles are
// ordered down each tile-column first, matching the column-major storage,
// and that order keys every deterministic reduction merge.
struct TilePlan {
  std::size_t rows = 0, cols = 0;
  std::size_t block_rows = 64;  // bs
  std::size_t work_size = 4;    // ws; columns per tile = ws * bs
  std::size_t workers = 1;
  std::size_t grid_rows = 0, grid_cols = 0;
  std::vector<TileRange> tiles;

  std::size_t tile_cols() const { return work_size * block_rows; }
};

TilePlan plan_tiles(std::size_t m, std::size_t n, std::size_t bs,
                    std::size_t ws, std::size_t workers);

}  // namespace drot

#endif  // DROT_TILES_HPP_
