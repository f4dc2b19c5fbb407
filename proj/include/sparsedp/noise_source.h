// Copyright 2026 The sparsedp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPARSEDP_NOISE_SOURCE_H_
#define SPARSEDP_NOISE_SOURCE_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

#include "sparsedp/error.h"

namespace sparsedp {

// Seeded pseudo-random stream. The engine output is fixed by the C++
// standard and every derived draw is computed here rather than through
// <random> distributions, whose algorithms are implementation-defined. The
// same seed and call sequence therefore reproduce the same values on any
// platform with IEEE doubles and the same libm.
//
// Not suitable for production privacy deployments: it is not a
// cryptographically secure source.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n - 1}, unbiased by rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    require(n > 0, ErrorCode::kInvalidParameter, "uniform_index over empty range");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the second variate of each pair is cached.
  double standard_normal() {
    if (cached_normal_) {
      const double z = *cached_normal_;
      cached_normal_.reset();
      return z;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  // An independent stream keyed by (seed, stream_id).
  NoiseSource fork(std::uint64_t stream_id) const {
    return NoiseSource(mix(seed_ ^ mix(stream_id + 0x9e3779b97f4a7c15ULL)));
  }

 private:
  // splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

}  // namespace sparsedp

#endif  // SPARSEDP_NOISE_SOURCE_H_
