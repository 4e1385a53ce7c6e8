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

#include "prefopt/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "prefopt/error.hpp"

namespace prefopt {

std::uint64_t Random::uniform_index(std::uint64_t n) {
  // Rejection keeps the result exactly uniform for any n.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double Random::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Random::serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Random Random::deserialize(const std::string& text) {
  Random r;
  std::istringstream in(text);
  in >> r.engine_;
  if (in.fail()) {
    throw Error(ErrorCode::kMalformedDocument, "unreadable random engine state");
  }
  return r;
}

std::uint64_t Random::derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace prefopt
