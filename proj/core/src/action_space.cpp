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

#include "prefopt/action_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "prefopt/error.hpp"

namespace prefopt {

namespace {

double bound_slack(const DimensionSpec& d) {
  return kGridTolerance * std::max(1.0, std::abs(d.range()));
}

void check_dimension(const DimensionSpec& d) {
  std::ostringstream why;
  if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !std::isfinite(d.step)) {
    why << "non-finite bound or step";
  } else if (!(d.lower < d.upper)) {
    why << "lower " << d.lower << " must be below upper " << d.upper;
  } else if (!(d.step > 0.0)) {
    why << "step " << d.step << " must be positive";
  } else if (d.step > d.range() * (1.0 + kGridTolerance)) {
    why << "step " << d.step << " exceeds range " << d.range();
  } else if (d.point_count() < 2) {
    why << "fewer than two grid points";
  } else {
    return;
  }
  throw Error(ErrorCode::kInvalidDimension, "dimension '" + d.name + "': " + why.str());
}

}  // namespace

std::size_t DimensionSpec::point_count() const {
  if (!(step > 0.0) || !(upper >= lower)) return 0;
  return static_cast<std::size_t>(std::floor((upper - lower) / step + kGridTolerance)) + 1;
}

ActionSpace::ActionSpace(std::vector<DimensionSpec> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw Error(ErrorCode::kInvalidDimension, "action space needs at least one dimension");
  }
  for (const auto& d : dims_) check_dimension(d);
}

std::uint64_t ActionSpace::grid_size() const {
  std::uint64_t n = 1;
  for (const auto& d : dims_) n *= d.point_count();
  return n;
}

double ActionSpace::min_step() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& d : dims_) h = std::min(h, d.step);
  return h;
}

std::size_t ActionSpace::snap_index(std::size_t j, double x) const {
  const auto& d = dims_[j];
  const double t = (x - d.lower) / d.step;
  // ceil(t - 1/2) sends exact midpoints to the lower neighbour.
  const double k = std::ceil(t - 0.5 - kGridTolerance);
  const double last = static_cast<double>(d.point_count() - 1);
  return static_cast<std::size_t>(std::clamp(k, 0.0, last));
}

std::vector<std::size_t> ActionSpace::index_of(const Action& a) const {
  validate(a);
  std::vector<std::size_t> index(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j) index[j] = snap_index(j, a.coords[j]);
  return index;
}

Action ActionSpace::from_index(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "grid index has wrong length");
  }
  Action a;
  a.coords.resize(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    if (index[j] >= dims_[j].point_count()) {
      throw Error(ErrorCode::kOutOfBounds, "grid index past the last point of '" + dims_[j].name + "'");
    }
    a.coords[j] = dims_[j].value_at(index[j]);
  }
  return a;
}

Action ActionSpace::grid_point(std::uint64_t flat) const {
  if (flat >= grid_size()) throw Error(ErrorCode::kOutOfBounds, "flat grid index out of range");
  std::vector<std::size_t> index(dims_.size());
  for (std::size_t j = dims_.size(); j-- > 0;) {
    const std::uint64_t count = dims_[j].point_count();
    index[j] = static_cast<std::size_t>(flat % count);
    flat /= count;
  }
  return from_index(index);
}

bool ActionSpace::contains(const Action& a) const noexcept {
  if (a.coords.size() != dims_.size()) return false;
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    const auto& d = dims_[j];
    const double x = a.coords[j];
    if (!std::isfinite(x)) return false;
    if (x < d.lower - bound_slack(d) || x > d.upper + bound_slack(d)) return false;
    const double k = std::round((x - d.lower) / d.step);
    if (k < 0.0 || k >= static_cast<double>(d.point_count())) return false;
    if (std::abs(x - d.value_at(static_cast<std::size_t>(k))) > kGridTolerance * d.step) return false;
  }
  return true;
}

void ActionSpace::validate(const Action& a) const {
  if (a.coords.size() != dims_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "action has " + std::to_string(a.coords.size()) +
                                                   " coordinates, space has " +
                                                   std::to_string(dims_.size()));
  }
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    const auto& d = dims_[j];
    const double x = a.coords[j];
    if (!std::isfinite(x) || x < d.lower - bound_slack(d) || x > d.upper + bound_slack(d)) {
      throw Error(ErrorCode::kOutOfBounds, "coordinate " + std::to_string(x) + " outside '" + d.name + "'");
    }
  }
  if (!contains(a)) throw Error(ErrorCode::kOffGrid, "action does not lie on the grid");
}

Action ActionSpace::snap(std::span<const double> raw) const {
  if (raw.size() != dims_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "raw point has wrong length");
  }
  Action a;
  a.coords.resize(dims_.size());
  for (std::size_t j = 0; j < dims_.size(); ++j) {
    const auto& d = dims_[j];
    if (!std::isfinite(raw[j]) || raw[j] < d.lower - bound_slack(d) || raw[j] > d.upper + bound_slack(d)) {
      throw Error(ErrorCode::kOutOfBounds, "coordinate " + std::to_string(raw[j]) + " outside '" + d.name + "'");
    }
    a.coords[j] = d.value_at(snap_index(j, raw[j]));
  }
  return a;
}

ActionSpace new_action_space(std::vector<DimensionSpec> dims) { return ActionSpace(std::move(dims)); }

std::uint64_t grid_size(const ActionSpace& space) { return space.grid_size(); }

Action snap_to_grid(const ActionSpace& space, std::span<const double> raw) { return space.snap(raw); }

std::vector<Action> uniform_random_actions(const ActionSpace& space, std::size_t n, Random& rng) {
  std::vector<Action> out;
  out.reserve(n);
  const std::uint64_t total = space.grid_size();
  for (std::size_t i = 0; i < n; ++i) out.push_back(space.grid_point(rng.uniform_index(total)));
  return out;
}

std::vector<Action> trace_line(const ActionSpace& space, const Action& anchor,
                               std::span<const double> direction) {
  space.validate(anchor);
  const std::size_t v = space.dimension();
  if (direction.size() != v) {
    throw Error(ErrorCode::kDimensionMismatch, "line direction has wrong length");
  }
  double norm = 0.0;
  for (double x : direction) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) return {anchor};

  std::vector<double> dir(v);
  for (std::size_t j = 0; j < v; ++j) dir[j] = direction[j] / norm;

  // Parameter interval [t_lo, t_hi] over which anchor + t * dir stays in the box.
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v; ++j) {
    if (std::abs(dir[j]) < 1e-15) continue;
    const auto& d = space.dim(j);
    const double t1 = (d.lower - anchor[j]) / dir[j];
    const double t2 = (d.upper - anchor[j]) / dir[j];
    t_lo = std::max(t_lo, std::min(t1, t2));
    t_hi = std::min(t_hi, std::max(t1, t2));
  }

  const double h = space.min_step();
  const auto k_lo = static_cast<long long>(std::ceil(t_lo / h - kGridTolerance));
  const auto k_hi = static_cast<long long>(std::floor(t_hi / h + kGridTolerance));

  std::vector<Action> line;
  std::set<Action> seen;
  std::vector<double> raw(v);
  for (long long k = std::min(k_lo, 0LL); k <= std::max(k_hi, 0LL); ++k) {
    const double t = static_cast<double>(k) * h;
    for (std::size_t j = 0; j < v; ++j) {
      const auto& d = space.dim(j);
      raw[j] = std::clamp(anchor[j] + t * dir[j], d.lower, d.upper);
    }
    Action a = k == 0 ? anchor : space.snap(raw);
    if (seen.insert(a).second) line.push_back(std::move(a));
  }
  return line;
}

std::vector<Action> random_line(const ActionSpace& space, const Action& anchor, Random& rng) {
  std::vector<double> dir(space.dimension());
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : dir) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  return trace_line(space, anchor, dir);
}

std::vector<DimensionSpec> essential_constraint_dimensions() {
  return {
      {"average_forward_velocity", 0.3, 0.6, 0.05, "m/s"},
      {"clearance_tau", 0.4, 0.7, 0.1, ""},
      {"minimum_foot_clearance", 0.05, 0.19, 0.02, "m"},
      {"impact_velocity", -0.8, -0.2, 0.1, "m/s"},
      {"step_length", 0.2, 0.4, 0.05, "m"},
  };
}

}  // namespace prefopt
