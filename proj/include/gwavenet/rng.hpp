/* Copyright 2026 The gWaveNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <cstdint>
#include <iterator>
#include <utility>

namespace gwavenet {

/// SplitMix64 finalizer. Used to expand seeds and to derive sub-seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Sub-seed for stream `index` of a master seed, e.g. per patch or per epoch.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded pseudo-random generator: xoshiro256** with its state expanded from
/// the 64-bit seed by SplitMix64 (Blackman & Vigna reference algorithms).
///
/// Integer and uniform draws are pure integer/IEEE arithmetic and therefore
/// bit-identical on every platform. Normal draws use Box-Muller and so go
/// through the C library's log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal draw.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates; independent of the standard library's unspecified shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = below(i);
      using std::swap;
      swap(*(first + static_cast<std::ptrdiff_t>(i - 1)), *(first + static_cast<std::ptrdiff_t>(j)));
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gwavenet
