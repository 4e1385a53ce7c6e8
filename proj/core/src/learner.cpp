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

#include "prefopt/learner.hpp"

#include <algorithm>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "prefopt/error.hpp"

namespace prefopt {

LearnerConfig LearnerConfig::defaults_for(ActionSpace space, std::uint64_t seed) {
  LearnerConfig config;
  config.hp = KernelHyperparams::defaults_for(space);
  config.c_p = NoiseParam::default_for(config.hp);
  config.space = std::move(space);
  config.seed = seed;
  return config;
}

void LearnerConfig::validate() const {
  if (space.dimension() == 0) throw Error(ErrorCode::kInvalidConfig, "action space has no dimensions");
  if (n_per_iteration < 2) {
    throw Error(ErrorCode::kInvalidConfig, "n_per_iteration must be at least 2 to form a pair");
  }
  hp.validate(space.dimension());
}

MvnSampler::MvnSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance) : mean_(std::move(mean)) {
  const Eigen::Index k = mean_.size();
  if (covariance.rows() != k || covariance.cols() != k) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance shape does not match the mean");
  }
  if (k == 0) return;
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::kNonSymmetricCovariance, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    if (factor_.allFinite()) return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (covariance + covariance.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = eig.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd MvnSampler::draw(Random& rng) const {
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  if (z.size() == 0) return mean_;
  return mean_ + factor_ * z;
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Random& rng) {
  return MvnSampler(mean, covariance).draw(rng);
}

std::vector<std::size_t> thompson_select(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                                         std::size_t n, Random& rng) {
  if (mean.size() == 0) throw Error(ErrorCode::kDimensionMismatch, "cannot select from an empty set");
  const MvnSampler sampler(mean, covariance);
  std::vector<std::size_t> picks;
  picks.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd f = sampler.draw(rng);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < f.size(); ++i) {
      if (f[i] > f[best]) best = i;
    }
    picks.push_back(static_cast<std::size_t>(best));
  }
  return picks;
}

Learner::Learner(LearnerConfig config) : config_(std::move(config)) {
  config_.validate();
  state_.rng = Random(config_.seed);
}

void Learner::notify(PosteriorStage stage, const PosteriorEstimate& posterior) const {
  if (observer_) observer_(stage, state_.iteration + (stage == PosteriorStage::kProposal ? 1 : 0), posterior);
}

std::vector<Action> Learner::propose() {
  if (state_.pending) throw Error(ErrorCode::kPendingProposalExists, "previous proposal not yet judged");

  ProposalTrace trace;
  trace.iteration = state_.iteration + 1;
  const std::size_t n = config_.n_per_iteration;

  if (!state_.incumbent) {
    trace.proposals = uniform_random_actions(config_.space, n, state_.rng);
  } else {
    trace.anchor = state_.incumbent;
    trace.line = random_line(config_.space, *state_.incumbent, state_.rng);
    trace.subset = trace.line;
    std::set<Action> in_subset(trace.line.begin(), trace.line.end());
    for (const auto& a : state_.executed) {
      if (in_subset.insert(a).second) trace.subset.push_back(a);
    }
    const PosteriorEstimate posterior =
        laplace_posterior(trace.subset, state_.dataset, config_.hp, config_.c_p);
    notify(PosteriorStage::kProposal, posterior);
    for (std::size_t idx : thompson_select(posterior.mean, posterior.covariance, n, state_.rng)) {
      trace.proposals.push_back(trace.subset[idx]);
    }
  }

  state_.pending = PendingProposal{trace.proposals, false};
  auto proposals = trace.proposals;
  trace_ = std::move(trace);
  return proposals;
}

void Learner::record_execution(std::span<const Action> actions) {
  if (!state_.pending) throw Error(ErrorCode::kNoPendingProposal, "nothing was proposed");
  if (state_.pending->executed) {
    throw Error(ErrorCode::kProposalMismatch, "the pending proposal was already executed");
  }
  if (!std::equal(actions.begin(), actions.end(), state_.pending->actions.begin(),
                  state_.pending->actions.end())) {
    throw Error(ErrorCode::kProposalMismatch, "executed actions differ from the pending proposal");
  }
  for (const auto& a : actions) {
    if (std::find(state_.executed.begin(), state_.executed.end(), a) == state_.executed.end()) {
      state_.executed.push_back(a);
    }
  }
  state_.pending->executed = true;
}

void Learner::record_preferences(std::vector<PreferenceRecord> prefs) {
  if (!state_.pending || !state_.pending->executed) {
    throw Error(ErrorCode::kNoPendingProposal, "no executed proposal is awaiting preferences");
  }
  const auto& pair_set = state_.pending->actions;
  auto in_pending = [&](const Action& a) {
    return std::find(pair_set.begin(), pair_set.end(), a) != pair_set.end();
  };
  for (const auto& p : prefs) {
    if (p.preferred == p.rejected) {
      throw Error(ErrorCode::kPreferenceBetweenIdenticalActions, "an action cannot be preferred to itself");
    }
    if (!in_pending(p.preferred) || !in_pending(p.rejected)) {
      throw Error(ErrorCode::kUnknownAction, "preference names an action outside the current proposal");
    }
  }

  const std::size_t iteration = state_.iteration + 1;
  for (auto& p : prefs) {
    p.iteration = iteration;
    state_.dataset.push_back(std::move(p));
  }
  state_.pending.reset();
  state_.iteration = iteration;
  update_best();
}

void Learner::update_best() {
  if (state_.executed.empty()) return;
  PosteriorEstimate posterior = laplace_posterior(state_.executed, state_.dataset, config_.hp, config_.c_p);
  notify(PosteriorStage::kIncumbent, posterior);
  state_.incumbent = state_.executed[posterior.argmax_mean()];
  state_.incumbent_posterior = std::move(posterior);
}

}  // namespace prefopt
