//
// Copyright 2026 The pdbrw Authors
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
//

#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace pdbrw {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Random source used by every sampler.
///
/// Wraps std::mt19937_64 and satisfies UniformRandomBitGenerator, so it can
/// also be handed to standard distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Standard exponential.
  double exponential();
  /// Standard normal.
  double normal() { return normal_(engine_); }
  /// Uniform index in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Independent stream for replicate `index` under `master_seed`.
///
/// The engine seed is mix64(master_seed ^ mix64(index + golden)), a
/// counter-mode hash, so the stream depends only on (master_seed, index)
/// and never on which thread consumes it.
Rng seed_stream(std::uint64_t master_seed, std::uint64_t index);

/// Seed used when none is given on the command line.
inline constexpr std::uint64_t kDefaultSeed = 20190501;

}  // namespace pdbrw
