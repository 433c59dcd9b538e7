//  Copyright 2026 The lasp-sim Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef LASP_RNG_HPP_
#define LASP_RNG_HPP_

#include <cstdint>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string_view>

#include "lasp/encoding.hpp"

namespace lasp {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Seed for a node-local generator: experiment seed xor hash of the id.
  static std::uint64_t derive(std::uint64_t seed, std::string_view id) {
    return seed ^ codec::fnv1a(id);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound is 0");
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw std::invalid_argument("Rng::between: hi < lo");
    if (lo == hi) return lo;
    return lo + below(hi - lo + 1);
  }

  /// Bernoulli(p) with 53-bit resolution.
  bool chance(double p) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u < p;
  }

  /// Uniform pick from a non-empty sized range.
  template <typename Range>
  auto pick(const Range& r) -> decltype(*std::begin(r)) {
    const auto n = static_cast<std::uint64_t>(std::size(r));
    if (n == 0) throw std::invalid_argument("Rng::pick: empty range");
    auto it = std::begin(r);
    std::advance(it, static_cast<std::ptrdiff_t>(below(n)));
    return *it;
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lasp

#endif  // LASP_RNG_HPP_
