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

#ifndef PREFOPT_ACTION_SPACE_HPP
#define PREFOPT_ACTION_SPACE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prefopt/random.hpp"

namespace prefopt {

/// Slack used when counting grid points and when accepting coordinates that
/// sit marginally outside a bound because of floating-point noise.
inline constexpr double kGridTolerance = 1e-9;

struct DimensionSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double step = 0.0;
  std::string unit;

  /// floor((upper - lower) / step + tolerance) + 1
  std::size_t point_count() const;
  /// Grid coordinate of the k-th point, lower + k * step.
  double value_at(std::size_t k) const { return lower + static_cast<double>(k) * step; }
  double range() const { return upper - lower; }

  bool operator==(const DimensionSpec&) const = default;
};

/// A point of the discretized search grid. Coordinates produced by this
/// library are always of the exact form lower + k * step, so equality is
/// exact comparison.
struct Action {
  std::vector<double> coords;

  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t j) const { return coords[j]; }

  bool operator==(const Action&) const = default;
  auto operator<=>(const Action&) const = default;
};

class ActionSpace {
 public:
  ActionSpace() = default;
  /// Throws Error(kInvalidDimension) for empty lists or any invalid dimension.
  explicit ActionSpace(std::vector<DimensionSpec> dims);

  std::size_t dimension() const { return dims_.size(); }
  const std::vector<DimensionSpec>& dims() const { return dims_; }
  const DimensionSpec& dim(std::size_t j) const { return dims_[j]; }

  /// Product of per-dimension point counts, computed without enumeration.
  std::uint64_t grid_size() const;
  /// Smallest per-dimension step; the arc-length increment used by lines.
  double min_step() const;

  /// Per-dimension grid index of an on-grid action.
  std::vector<std::size_t> index_of(const Action& a) const;
  Action from_index(std::span<const std::size_t> index) const;
  /// Mixed-radix decoding, first dimension slowest.
  Action grid_point(std::uint64_t flat) const;

  bool contains(const Action& a) const noexcept;
  /// Throws kDimensionMismatch, kOutOfBounds or kOffGrid.
  void validate(const Action& a) const;

  /// Nearest grid point per coordinate; exact ties go to the lower point.
  /// Throws kOutOfBounds if a coordinate is outside [lower, upper] by more
  /// than the grid tolerance.
  Action snap(std::span<const double> raw) const;

  bool operator==(const ActionSpace&) const = default;

 private:
  std::size_t snap_index(std::size_t j, double x) const;

  std::vector<DimensionSpec> dims_;
};

ActionSpace new_action_space(std::vector<DimensionSpec> dims);
std::uint64_t grid_size(const ActionSpace& space);
Action snap_to_grid(const ActionSpace& space, std::span<const double> raw);

/// n independent uniform draws over the full grid; duplicates permitted.
std::vector<Action> uniform_random_actions(const ActionSpace& space, std::size_t n, Random& rng);

/// Grid points met by the line through `anchor` along `direction`: the line
/// is clipped to the bounding box, sampled at arc-length multiples of the
/// smallest step, snapped, and deduplicated. Points are ordered along the
/// direction and always include `anchor`.
std::vector<Action> trace_line(const ActionSpace& space, const Action& anchor,
                               std::span<const double> direction);

/// trace_line along a direction drawn uniformly from the unit sphere.
std::vector<Action> random_line(const ActionSpace& space, const Action& anchor, Random& rng);

/// The five essential-constraint dimensions of the planar biped study:
/// forward velocity, clearance phase, minimum foot clearance, impact
/// velocity and step length.
std::vector<DimensionSpec> essential_constraint_dimensions();

}  // namespace prefopt

#endif  // PREFOPT_ACTION_SPACE_HPP
