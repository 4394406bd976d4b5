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

#ifndef DROT_PROBGEN_HPP_
#define DROT_PROBGEN_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "drot/errors.hpp"
#include "drot/matrix.hpp"
#include "drot/problem.hpp"
#include "drot/rng.hpp"

namespace drot {

// Synthetic instance family: m source and n target samples from 2D
// Gaussians with randomized means and covariances, squared Euclidean cost
// normalized to unit max entry, uniform marginals.
//
// Substream layout (a frozen part of the reproducibility contract):
//   0            source mean (2 standard normals)
//   1            source covariance factor A_s (4 uniforms in [0,1])
//   2            target mean (5 + sigma_t * standard normal per entry)
//   3            target covariance factor A_t (4 uniforms in [0,1])
//   4, 5         Dirichlet weights for p and q (optional mode)
//   100 + i      source point i (standard normal pair)
//   100 + m + j  target point j
struct GaussianSpec {
  std::size_t m = 0, n = 0;
  double sigma_t = 5.0;
  std::uint64_t seed = 0;

  enum class OnDegenerate { error, resample };
  OnDegenerate on_degenerate = OnDegenerate::error;

  // Dirichlet(1,...,1) marginals instead of uniform ones; used by sparsity
  // studies, not part of the standard protocol.
  bool dirichlet_marginals = false;
};

// C_ij = |xs[:,i] - xt[:,j]|^2 for point sets stored one point per column.
inline Matrix<double> squared_euclidean_cost(const Matrix<double>& xs,
                                             const Matrix<double>& xt) {
  if (xs.rows() != xt.rows())
    fail(Errc::dimension_mismatch, "point dimensions differ");
  const std::size_t d = xs.rows();
  Matrix<double> cost(xs.cols(), xt.cols());
  for (std::size_t j = 0; j < xt.cols(); ++j)
    for (std::size_t i = 0; i < xs.cols(); ++i) {
      double acc = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xs(k, i) - xt(k, j);
        acc += diff * diff;
      }
      cost(i, j) = acc;
    }
  return cost;
}

// Scales so that the largest absolute entry is exactly one.
inline Matrix<double> normalize_cost(Matrix<double> cost) {
  double cmax = 0;
  for (double c : cost.flat()) cmax = std::max(cmax, std::abs(c));
  if (!(cmax > 0)) fail(Errc::degenerate_cost, "all-zero cost matrix");
  for (double& c : cost.flat()) c /= cmax;
  return cost;
}

namespace detail {

struct Gaussian2D {
  double mean[2];
  double factor[4];  // column-major 2x2; covariance = factor * factor'
};

inline Gaussian2D sample_params(const CounterRng& base, std::uint64_t mean_stream,
                                std::uint64_t factor_stream, double mean_shift,
                                double mean_scale) {
  Gaussian2D g;
  CounterRng mean_rng = base.substream(mean_stream);
  double z0, z1;
  mean_rng.next_gaussian_pair(z0, z1);
  g.mean[0] = mean_shift + mean_scale * z0;
  g.mean[1] = mean_shift + mean_scale * z1;
  CounterRng f_rng = base.substream(factor_stream);
  for (double& f : g.factor) f = f_rng.next_unit();
  return g;
}

inline Matrix<double> sample_points(const CounterRng& base, const Gaussian2D& g,
                                    std::size_t count, std::uint64_t stream0) {
  Matrix<double> pts(2, count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng = base.substream(stream0 + i);
    double z0, z1;
    rng.next_gaussian_pair(z0, z1);
    pts(0, i) = g.mean[0] + g.factor[0] * z0 + g.factor[2] * z1;
    pts(1, i) = g.mean[1] + g.factor[1] * z0 + g.factor[3] * z1;
  }
  return pts;
}

inline std::vector<double> dirichlet_uniform(const CounterRng& base,
                                             std::uint64_t stream,
                                             std::size_t count) {
  CounterRng rng = base.substream(stream);
  std::vector<double> w(count);
  double total = 0;
  for (double& x : w) {
    x = -std::log(rng.next_unit_open());
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace detail

inline TransportProblem<double> gen_gaussian_problem(const GaussianSpec& spec) {
  if (spec.m == 0 || spec.n == 0)
    fail(Errc::empty_dimension, "gen_gaussian_problem");
  if (!(spec.sigma_t > 0)) fail(Errc::bad_config, "sigma_t must be positive");

  const int max_attempts =
      spec.on_degenerate == GaussianSpec::OnDegenerate::resample ? 16 : 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? spec.seed
                     : CounterRng::derive_key(spec.seed, 0xA000u + attempt);
    CounterRng base(seed);
    const auto src = detail::sample_params(base, 0, 1, 0.0, 1.0);
    const auto tgt = detail::sample_params(base, 2, 3, 5.0, spec.sigma_t);
    const auto xs = detail::sample_points(base, src, spec.m, 100);
    const auto xt = detail::sample_points(base, tgt, spec.n, 100 + spec.m);

    Matrix<double> cost = squared_euclidean_cost(xs, xt);
    double cmax = 0;
    for (double c : cost.flat()) cmax = std::max(cmax, std::abs(c));
    if (!(cmax > 0)) {
      if (attempt + 1 == max_attempts)
        fail(Errc::degenerate_cost, "all samples coincide");
      continue;
    }
    for (double& c : cost.flat()) c /= cmax;

    TransportProblem<double> problem;
    problem.cost = std::move(cost);
    if (spec.dirichlet_marginals) {
      problem.p = detail::dirichlet_uniform(base, 4, spec.m);
      problem.q = detail::dirichlet_uniform(base, 5, spec.n);
    } else {
      problem.p.assign(spec.m, 1.0 / static_cast<double>(spec.m));
      problem.q.assign(spec.n, 1.0 / static_cast<double>(spec.n));
    }
    return problem;
  }
  fail(Errc::degenerate_cost, "unreachable");
}

template <class T>
TransportProblem<T> gen_gaussian_problem_as(const GaussianSpec& spec) {
  TransportProblem<double> p = gen_gaussian_problem(spec);
  TransportProblem<T> out;
  out.cost = p.cost.template cast<T>();
  out.p.assign(p.p.begin(), p.p.end());
  out.q.assign(p.q.begin(), p.q.end());
  return out;
}

}  // namespace drot

#endif  // DROT_PROBGEN_HPP_
