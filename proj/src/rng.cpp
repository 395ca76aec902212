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

#include "palmgrip/rng.hpp"

namespace palmgrip {

std::uint64_t probability_threshold(double p) {
  if (!(p > 0.0)) return 0;
  if (p >= 1.0) return kUnit53;
  // p * 2^53 only rescales the exponent, so the product is exact.
  return static_cast<std::uint64_t>(p * static_cast<double>(kUnit53));
}

std::size_t CounterRng::categorical(std::span<const double> weights) {
  std::size_t last = weights.size();
  while (last > 0 && !(weights[last - 1] > 0.0)) --last;
  if (last == 0) return 0;
  const std::uint64_t draw = next53();
  std::uint64_t cumulative = 0;
  for (std::size_t i = 0; i + 1 < last; ++i) {
    cumulative += probability_threshold(weights[i]);
    if (draw < cumulative) return i;
  }
  return last - 1;
}

}  // namespace palmgrip
