// Copyright 2026 The notegen Authors
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

#include <cmath>
#include <cstdint>
#include <string>

#include "notegen/error.hpp"
#include "notegen/tensor.hpp"

namespace notegen {

/// SplitMix64 (Steele, Lea & Flood). The whole state is one 64-bit word, so
/// checkpoints capture it exactly and streams match on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t state() const noexcept { return state_; }
  void set_state(std::uint64_t s) noexcept { state_ = s; }

  bool operator==(const Rng&) const = default;

 private:
  std::uint64_t state_;
};

/// Entries i.i.d. uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape) {
  if (fan_in == 0 || fan_out == 0) fail(Errc::InvalidConfig, "glorot_uniform: fans must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor out(std::move(shape));
  for (double& v : out.data()) v = rng.uniform(-limit, limit);
  return out;
}

inline Tensor bernoulli_mask(Rng& rng, Shape shape, double keep_prob) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    fail(Errc::BadProbability, "keep probability " + std::to_string(keep_prob) + " outside (0, 1]");
  }
  Tensor out(std::move(shape));
  for (double& v : out.data()) v = rng.uniform() < keep_prob ? 1.0 : 0.0;
  return out;
}

}  // namespace notegen
