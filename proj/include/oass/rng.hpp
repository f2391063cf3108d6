// Copyright 2026 The OASS Authors.
//
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

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "oass/common.hpp"

namespace oass {

/// Deterministic random source. std::mt19937_64 has a fully specified output
/// sequence, and all distribution mapping is done here by hand, so a fixed
/// seed produces bit-identical draws on every platform and standard library.
/// The std::uniform_* distribution adaptors are implementation-defined and
/// must not be used anywhere in this codebase.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [lo, hi) with 53-bit resolution.
  double uniform(double lo, double hi) {
    const double unit =
        static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + unit * (hi - lo);
  }

  /// Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    detail::require(lo <= hi, "uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    const std::uint64_t limit = (UINT64_MAX / span) * span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  std::size_t index(std::size_t n) {
    detail::require(n > 0, "index: empty range");
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
  }

  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

  /// First k entries of a uniformly random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    detail::require(k <= n, "sample_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + index(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  /// Independent stream for a subtask; decorrelates without sharing state.
  Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace oass
