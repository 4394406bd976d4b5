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

#ifndef DROT_RNG_HPP_
#define DROT_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace drot {

// Counter-based generator built on the SplitMix64 mixing function. Output i
// of stream (key) is mix(key + (i+1) * GOLDEN), a pure function of (key, i),
// so instances regenerate bit-exactly from a seed on any platform and any
// point in a sampling pipeline can be given its own substream.
//
// The standard-library distributions are deliberately not used anywhere:
// their output is implementation-defined and would break the reproducibility
// contract of the problem generators.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Independent substream derivation; stream ids may themselves be derived.
  static std::uint64_t derive_key(std::uint64_t key, std::uint64_t stream) {
    return mix(key ^ mix(stream + 0x9E3779B97F4A7C15ull));
  }

  CounterRng substream(std::uint64_t stream) const {
    return CounterRng(derive_key(key_, stream));
  }

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix(key_ + counter_);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); never exactly zero, so safe under log().
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Marsaglia polar method. Uses only log/sqrt from libm (sqrt is correctly
  // rounded per IEEE 754), keeping the portability surface minimal.
  void next_gaussian_pair(double& z0, double& z1) {
    for (;;) {
      double a = 2.0 * next_unit() - 1.0;
      double b = 2.0 * next_unit() - 1.0;
      double s = a * a + b * b;
      if (s > 0.0 && s < 1.0) {
        double r = std::sqrt(-2.0 * std::log(s) / s);
        z0 = a * r;
        z1 = b * r;
        return;
      }
    }
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double z0, z1;
    next_gaussian_pair(z0, z1);
    spare_ = z1;
    have_spare_ = true;
    return z0;
  }

  // Uniform integer in [0, bound) by rejection, bias-free.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace drot

#endif  // DROT_RNG_HPP_
