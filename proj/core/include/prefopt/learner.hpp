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

#ifndef PREFOPT_LEARNER_HPP
#define PREFOPT_LEARNER_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prefopt/action_space.hpp"
#include "prefopt/preference_model.hpp"
#include "prefopt/random.hpp"

namespace prefopt {

struct LearnerConfig {
  ActionSpace space;
  std::size_t n_per_iteration = 2;
  KernelHyperparams hp;
  NoiseParam c_p{std::sqrt(2.0 * 1e-4)};
  std::uint64_t seed = 0;

  /// Default kernel and noise for `space`.
  static LearnerConfig defaults_for(ActionSpace space, std::uint64_t seed = 0);
  /// Throws kInvalidConfig (n < 2, bad noise) or hyperparameter errors.
  void validate() const;

  bool operator==(const LearnerConfig&) const = default;
};

struct PendingProposal {
  std::vector<Action> actions;
  bool executed = false;

  bool operator==(const PendingProposal&) const = default;
};

struct LearnerState {
  /// Completed iterations.
  std::size_t iteration = 0;
  /// Deduplicated, in order of first execution.
  std::vector<Action> executed;
  std::vector<PreferenceRecord> dataset;
  std::optional<Action> incumbent;
  std::optional<PosteriorEstimate> incumbent_posterior;
  Random rng;
  std::optional<PendingProposal> pending;

  bool operator==(const LearnerState&) const = default;
};

/// What happened while building the most recent proposal.
struct ProposalTrace {
  std::size_t iteration = 0;  // 1-based iteration the proposal belongs to
  std::optional<Action> anchor;
  std::vector<Action> line;
  std::vector<Action> subset;
  std::vector<Action> proposals;
};

enum class PosteriorStage { kProposal, kIncumbent };

using PosteriorObserver =
    std::function<void(PosteriorStage stage, std::size_t iteration, const PosteriorEstimate& posterior)>;

/// Draws from N(mean, covariance) through one factorization L L' = covariance
/// (Cholesky, falling back to an eigendecomposition with negative
/// eigenvalues clipped to zero).
class MvnSampler {
 public:
  /// Throws kNonSymmetricCovariance or kDimensionMismatch.
  MvnSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  Eigen::VectorXd draw(Random& rng) const;
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Random& rng);

/// n Thompson draws over the posterior; returns the argmax index of each
/// draw, ties to the lowest index.
std::vector<std::size_t> thompson_select(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                                         std::size_t n, Random& rng);

/// The line-restricted Thompson-sampling preference learner.
///
/// One iteration is propose() -> record_execution() -> record_preferences().
/// The first iteration proposes uniform-random actions. Later iterations
/// sample over the union of a random line through the incumbent and all
/// executed actions. After the preferences arrive the posterior is refit over
/// the executed actions and the incumbent moves to its mean argmax.
class Learner {
 public:
  explicit Learner(LearnerConfig config);

  const LearnerConfig& config() const { return config_; }
  const LearnerState& state() const { return state_; }
  const std::optional<ProposalTrace>& last_proposal() const { return trace_; }

  void set_posterior_observer(PosteriorObserver observer) { observer_ = std::move(observer); }

  /// Throws kPendingProposalExists.
  std::vector<Action> propose();
  /// `actions` must equal the pending proposal. Throws kNoPendingProposal,
  /// kProposalMismatch.
  void record_execution(std::span<const Action> actions);
  /// Each record must compare two distinct actions of the pending proposal;
  /// an empty list is "no preference". Iteration numbers are stamped here.
  /// Throws kNoPendingProposal, kUnknownAction,
  /// kPreferenceBetweenIdenticalActions.
  void record_preferences(std::vector<PreferenceRecord> prefs);
  /// Refits the posterior over the executed set and moves the incumbent.
  void update_best();

 private:
  void notify(PosteriorStage stage, const PosteriorEstimate& posterior) const;

  LearnerConfig config_;
  LearnerState state_;
  std::optional<ProposalTrace> trace_;
  PosteriorObserver observer_;
};

}  // namespace prefopt

#endif  // PREFOPT_LEARNER_HPP
