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

#ifndef DROT_DROT_HPP_
#define DROT_DROT_HPP_

#include "drot/errors.hpp"
#include "drot/fused.hpp"
#include "drot/matrix.hpp"
#include "drot/ops.hpp"
#include "drot/probgen.hpp"
#include "drot/problem.hpp"
#include "drot/reference.hpp"
#include "drot/rng.hpp"
#include "drot/solver.hpp"
#include "drot/threadpool.hpp"
#include "drot/tiles.hpp"

#endif  // DROT_DROT_HPP_
