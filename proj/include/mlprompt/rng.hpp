// Copyright 2025 The MLPrompt Authors
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

#ifndef MLPROMPT_RNG_HPP
#define MLPROMPT_RNG_HPP

#include <cstdint>

#include "mlprompt/errors.hpp"

namespace mlprompt {

/// SplitMix64 (Steele, Lea, Flood 2014; Vigna's reference constants).
/// Chosen over std::mt19937 because the whole algorithm fits on this
/// page: the state walks by the golden-ratio increment and each output
/// is a fixed xor-multiply finalizer of it, so a seed replays the exact
/// same stream on every platform and in any reimplementation.
///
///   state += 0x9E3779B97F4A7C15   (2^64 / phi)
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Next raw 64-bit output.
  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi], both ends included. Unbiased: raw
  /// draws below 2^64 mod span are rejected so the kept range is an
  /// exact multiple of the span.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi)
      throw ConfigError("uniform_int: empty range [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
    std::uint64_t span = static_cast<std::uint64_t>(hi) -
                         static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());  // full width
    std::uint64_t reject_below = (0 - span) % span;  // == 2^64 mod span
    std::uint64_t r = next();
    while (r < reject_below) r = next();
    return lo + static_cast<std::int64_t>(r % span);
  }

  /// Uniform double in [0, 1) on the 2^-53 grid: the top 53 bits of one
  /// raw draw scaled down, so every representable result is equally
  /// likely and 1.0 is impossible.
  double uniform_double() { return (next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace mlprompt

#endif  // MLPROMPT_RNG_HPP
