// Copyright 2026 The prefopt Authors.
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

#ifndef PREFOPT_RANDOM_HPP
#define PREFOPT_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string>

namespace prefopt {

/// Seeded random source.
///
/// The standard distributions (`std::normal_distribution` and friends) are
/// implementation-defined and carry hidden cached state, so the variates here
/// are derived directly from the raw mt19937_64 stream. Two sources with the
/// same seed produce the same sequence on every platform, and equality of two
/// sources means equality of everything they will ever produce.
class Random {
 public:
  explicit Random(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller; consumes exactly two raw draws.
  double normal();

  bool operator==(const Random& other) const { return engine_ == other.engine_; }

  /// Textual engine state, as produced by the standard stream operators.
  std::string serialize() const;
  static Random deserialize(const std::string& text);

  /// Derives an independent seed for a sub-stream (splitmix64 finalizer).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace prefopt

#endif  // PREFOPT_RANDOM_HPP
