// Copyright 2026 The palmgrip Authors
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

// Counter-based 64-bit generator used for every stochastic world decision.
//
// Algorithm (reproducible in any language with 64-bit unsigned wraparound):
//
//   mix(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//            z ^= z >> 27; z *= 0x94D049BB133111EB;
//            z ^= z >> 31; return z
//   key     = mix(seed ^ mix(stream))
//   draw(k) = mix(key + (k + 1) * 0x9E3779B97F4A7C15)        k = 0, 1, ...
//
// Streams are derived from decision names with 64-bit FNV-1a. Branches
// compare the top 53 bits of a draw against integer thresholds, so outcome
// selection never depends on floating-point rounding.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace palmgrip {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kUnit53 = 1ULL << 53;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Folds `value` into `h`; used to build stream ids from several fields.
constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t value) {
  return mix64(h ^ (value + kGoldenGamma + (h << 6) + (h >> 2)));
}

/// Probability -> threshold on a 53-bit draw. Exact for p in [0,1].
std::uint64_t probability_threshold(double p);

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream))) {}

  /// The k-th output, independent of call history.
  std::uint64_t at(std::uint64_t k) const { return mix64(key_ + (k + 1) * kGoldenGamma); }
  std::uint64_t next() { return at(counter_++); }
  /// Top 53 bits of the next draw.
  std::uint64_t next53() { return next() >> 11; }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next53()) / static_cast<double>(kUnit53); }
  bool bernoulli(double p) { return next53() < probability_threshold(p); }
  /// Index i with probability weights[i]; integer cumulative thresholds,
  /// the last non-zero entry absorbs any rounding remainder.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace palmgrip
