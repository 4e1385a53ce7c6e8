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

// Independent reference computations and random instance generators shared by
// the unit tests and the acceptance runner. Nothing here calls into the
// library's numerics; the oracles are written from the formulas directly.

#ifndef PREFOPT_TESTS_SUPPORT_HPP
#define PREFOPT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "prefopt/action_space.hpp"
#include "prefopt/preference_model.hpp"

namespace prefopt::testing {

/// Every grid point, first dimension slowest, built by nested counting.
inline std::vector<Action> enumerate_grid(const ActionSpace& space) {
  std::vector<std::vector<double>> axes;
  for (const auto& d : space.dims()) {
    std::vector<double> axis;
    for (std::size_t k = 0;; ++k) {
      const double x = d.lower + static_cast<double>(k) * d.step;
      if (x > d.upper + 1e-9 * d.step) break;
      axis.push_back(x);
    }
    axes.push_back(std::move(axis));
  }
  std::vector<Action> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    Action a;
    for (std::size_t j = 0; j < axes.size(); ++j) a.coords.push_back(axes[j][idx[j]]);
    out.push_back(std::move(a));
    std::size_t j = axes.size();
    while (j > 0) {
      --j;
      if (++idx[j] < axes[j].size()) break;
      idx[j] = 0;
      if (j == 0) return out;
    }
  }
}

inline long double oracle_sigmoid(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

inline long double oracle_kernel(const Action& x, const Action& y, const std::vector<double>& ls, double sv) {
  long double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const long double r = (static_cast<long double>(x[j]) - y[j]) / ls[j];
    s += r * r;
  }
  return sv * std::exp(-0.5L * s);
}

/// Log posterior of two utilities with one preference (first over second),
/// using the closed-form 2x2 inverse.
struct TwoPointPosterior {
  long double k11, k12, k22, c;

  long double operator()(long double u1, long double u2) const {
    const long double det = k11 * k22 - k12 * k12;
    const long double quad = (k22 * u1 * u1 - 2 * k12 * u1 * u2 + k11 * u2 * u2) / det;
    return std::log(oracle_sigmoid((u1 - u2) / c)) - 0.5L * quad;
  }
};

/// Maximizer of `f` on the square grid [-half, half]^2 with spacing `step`.
template <typename F>
std::pair<double, double> grid_argmax_2d(const F& f, double half, double step) {
  const auto n = static_cast<long>(std::floor(half / step + 1e-9));
  long double best = -INFINITY;
  std::pair<double, double> arg{0, 0};
  for (long i = -n; i <= n; ++i) {
    const long double u1 = static_cast<long double>(i) * step;
    for (long j = -n; j <= n; ++j) {
      const long double u2 = static_cast<long double>(j) * step;
      const long double v = f(u1, u2);
      if (v > best) {
        best = v;
        arg = {static_cast<double>(u1), static_cast<double>(u2)};
      }
    }
  }
  return arg;
}

/// A random posterior problem: distinct grid actions, preferences between
/// distinct members, and perturbed hyperparameters.
struct Instance {
  ActionSpace space;
  std::vector<Action> actions;
  std::vector<PreferenceRecord> prefs;
  KernelHyperparams hp;
  double c_p = 1.0;
};

inline ActionSpace random_space(std::mt19937_64& gen, std::size_t min_dim, std::size_t max_dim,
                                std::size_t max_points = 9) {
  std::uniform_int_distribution<std::size_t> dim_count(min_dim, max_dim);
  std::uniform_int_distribution<std::size_t> points(2, max_points);
  std::uniform_real_distribution<double> lower(-2.0, 2.0);
  std::uniform_real_distribution<double> step(0.05, 1.0);
  std::vector<DimensionSpec> dims;
  const std::size_t v = dim_count(gen);
  for (std::size_t j = 0; j < v; ++j) {
    const double lo = lower(gen);
    const double st = step(gen);
    const std::size_t p = points(gen);
    dims.push_back({"x" + std::to_string(j), lo, lo + st * static_cast<double>(p - 1), st, ""});
  }
  return ActionSpace(std::move(dims));
}

inline Instance random_instance(std::mt19937_64& gen, std::size_t max_k, std::size_t max_prefs) {
  Instance inst;
  inst.space = random_space(gen, 1, 5);
  const std::size_t grid = static_cast<std::size_t>(inst.space.grid_size());
  std::uniform_int_distribution<std::size_t> kdist(2, std::min(max_k, grid));
  const std::size_t k = kdist(gen);
  std::vector<std::size_t> flat(grid);
  for (std::size_t i = 0; i < grid; ++i) flat[i] = i;
  std::shuffle(flat.begin(), flat.end(), gen);
  for (std::size_t i = 0; i < k; ++i) inst.actions.push_back(inst.space.grid_point(flat[i]));

  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::uniform_int_distribution<std::size_t> npref(0, max_prefs);
  const std::size_t m = npref(gen);
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t a = pick(gen);
    std::size_t b = pick(gen);
    while (b == a) b = pick(gen);
    inst.prefs.push_back({inst.actions[a], inst.actions[b], 0, 0});
  }

  const double sv_choices[] = {1e-4, 1e-2, 1.0};
  std::uniform_int_distribution<int> sv_pick(0, 2);
  std::uniform_real_distribution<double> factor(0.3, 3.0);
  inst.hp = KernelHyperparams::defaults_for(inst.space);
  for (auto& l : inst.hp.lengthscales) l *= factor(gen);
  inst.hp.signal_variance = sv_choices[sv_pick(gen)];
  inst.c_p = std::sqrt(2.0 * inst.hp.signal_variance) * std::uniform_real_distribution<double>(0.5, 2.0)(gen);
  return inst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("prefopt-" + tag + "-" + std::to_string(gen()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct ScopedDir {
  explicit ScopedDir(const std::string& tag) : path(temp_dir(tag)) {}
  ~ScopedDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path path;
};

}  // namespace prefopt::testing

#endif  // PREFOPT_TESTS_SUPPORT_HPP
