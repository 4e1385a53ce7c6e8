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

#ifndef PREFOPT_SIMULATION_HPP
#define PREFOPT_SIMULATION_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefopt/action_space.hpp"
#include "prefopt/learner.hpp"
#include "prefopt/random.hpp"

namespace prefopt {

enum class UtilityKind { kNegDistance, kQuadratic, kMultimodal };

std::string_view to_string(UtilityKind kind);
/// Accepts "negdistance", "quadratic", "multimodal". Throws kInvalidConfig.
UtilityKind parse_utility_kind(std::string_view text);

/// Ground-truth utility over a grid, used in place of a human judge.
///
///   negdistance: -|(a - optimum) / range|_2
///   quadratic:   -(a - optimum)' W (a - optimum), W diagonal positive,
///                distances in range-normalized units
///   multimodal:  exp(-d1 / width) + w2 exp(-d2 / width), d_i the
///                negdistance magnitude to each center, 0 < w2 < 1, so the
///                first center is the global maximum
class SyntheticUtility {
 public:
  static SyntheticUtility negdistance(const ActionSpace& space, Action optimum);
  static SyntheticUtility quadratic(const ActionSpace& space, Action optimum, std::vector<double> weights);
  static SyntheticUtility multimodal(const ActionSpace& space, Action optimum, Action secondary,
                                     double secondary_weight = 0.6, double width = 0.25);

  UtilityKind kind() const { return kind_; }
  const Action& optimum() const { return optimum_; }
  const std::optional<Action>& secondary() const { return secondary_; }
  const std::vector<double>& params() const { return params_; }
  const ActionSpace& space() const { return space_; }

  /// Throws kOffGrid (or the space's validation errors) for off-grid actions.
  double operator()(const Action& a) const;
  double max_value() const { return max_value_; }
  /// max - min over the grid.
  double value_range() const { return value_range_; }
  /// |(a - b) / range|_2
  double normalized_distance(const Action& a, const Action& b) const;

 private:
  SyntheticUtility(UtilityKind kind, const ActionSpace& space, Action optimum);
  double raw_value(const Action& a) const;
  void compute_extremes();

  UtilityKind kind_;
  ActionSpace space_;
  Action optimum_;
  std::optional<Action> secondary_;
  std::vector<double> params_;
  double max_value_ = 0.0;
  double value_range_ = 1.0;
};

double eval_utility(const SyntheticUtility& u, const Action& a);

/// How to build a utility for a given run seed. A missing optimum is drawn
/// uniformly from the grid with a stream derived from the seed.
struct UtilitySpec {
  UtilityKind kind = UtilityKind::kNegDistance;
  std::optional<Action> optimum;
  std::vector<double> weights;  // quadratic only; defaults to all ones
};

SyntheticUtility make_utility(const UtilitySpec& spec, const ActionSpace& space, std::uint64_t seed);

enum class Verdict { kPreferFirst, kPreferSecond, kNoPreference };
enum class JudgeNoise { kNoiseless, kNoisy };

std::string_view to_string(Verdict verdict);
/// Accepts "prefer_first", "prefer_second", "no_preference".
std::optional<Verdict> parse_verdict(std::string_view text);

/// Noiseless: the higher utility wins, exact ties are "no preference".
/// Noisy: the first action wins with probability g((U(a) - U(b)) / c_p).
/// Throws kIdenticalActions when a == b.
Verdict simulated_preference(const SyntheticUtility& u, const Action& a, const Action& b, NoiseParam c_p,
                             bool noiseless, Random& rng);

struct ExecutionOutcome {
  bool success = true;
  std::vector<std::string> tags;
  std::string video_url;

  bool operator==(const ExecutionOutcome&) const = default;
};

/// Boundary to whatever turns an action into observable behavior (a gait
/// optimizer plus hardware in the real setting).
class ActionExecutor {
 public:
  virtual ~ActionExecutor() = default;
  virtual std::vector<ExecutionOutcome> execute(std::span<const Action> actions) = 0;
};

/// Always succeeds without doing anything.
class StubExecutor final : public ActionExecutor {
 public:
  std::vector<ExecutionOutcome> execute(std::span<const Action> actions) override {
    return std::vector<ExecutionOutcome>(actions.size());
  }
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  /// U(optimum) - U(incumbent) after each iteration.
  std::vector<double> regret_curve;
  /// regret_curve divided by the utility range over the grid.
  std::vector<double> normalized_regret_curve;
  std::vector<Action> incumbent_curve;
  std::size_t unique_actions = 0;
  Action optimum;
  Action final_incumbent;
  /// Range-normalized distance between final incumbent and optimum.
  double final_distance = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

struct ExperimentHooks {
  ActionExecutor* executor = nullptr;  // StubExecutor when null
  PosteriorObserver posterior_observer;
  /// Called after each completed iteration.
  std::function<void(const Learner&)> on_iteration;
};

/// Drives a learner for `iterations` propose/execute/judge cycles. The judge
/// compares every pair of proposed actions; its random stream is derived from
/// config.seed.
ExperimentReport run_experiment(const LearnerConfig& config, const SyntheticUtility& u, std::size_t iterations,
                                JudgeNoise judge_noise, const ExperimentHooks& hooks = {});

struct BatchSummary {
  std::size_t repeats = 0;
  std::size_t iterations = 0;
  double success_threshold = 0.15;
  double success_fraction = 0.0;
  double median_final_regret = 0.0;
  double median_normalized_final_regret = 0.0;
  double q25_normalized_final_regret = 0.0;
  double q75_normalized_final_regret = 0.0;
  double median_final_distance = 0.0;
  double median_unique_actions = 0.0;
};

struct BatchResult {
  std::vector<ExperimentReport> reports;
  BatchSummary summary;
};

/// Independent runs with seeds base_seed .. base_seed + repeats - 1, each
/// with its own utility from `spec`. Runs may execute on `threads` workers
/// (0 = hardware concurrency); results are ordered by seed either way.
BatchResult batch_runs(const LearnerConfig& config, const UtilitySpec& spec, std::size_t iterations,
                       std::size_t repeats, std::uint64_t base_seed, JudgeNoise judge_noise,
                       double success_threshold = 0.15, unsigned threads = 0);

BatchSummary summarize(std::span<const ExperimentReport> reports, double success_threshold);

/// Linear-interpolated quantile, q in [0, 1]. Empty input gives NaN.
double quantile(std::vector<double> values, double q);

/// Header `seed,iteration,regret,<dimension names...>`, one row per iteration.
void write_regret_csv(std::ostream& out, std::span<const ExperimentReport> reports, const ActionSpace& space);

struct RegretRow {
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  double regret = 0.0;
  std::vector<double> incumbent;
};

/// Parses what write_regret_csv emits. Throws kMalformedDocument.
std::vector<RegretRow> read_regret_csv(std::istream& in, std::vector<std::string>* dimension_names = nullptr);

std::string summary_json(const BatchSummary& summary);

}  // namespace prefopt

#endif  // PREFOPT_SIMULATION_HPP
