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

#include "prefopt/preference_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Eigenvalues>

#include "prefopt/error.hpp"

namespace prefopt {

KernelHyperparams KernelHyperparams::defaults_for(const ActionSpace& space) {
  KernelHyperparams hp;
  hp.lengthscales.reserve(space.dimension());
  for (const auto& d : space.dims()) hp.lengthscales.push_back(d.range() / 2.0);
  return hp;
}

void KernelHyperparams::validate(std::size_t dimension) const {
  if (lengthscales.size() != dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "expected " + std::to_string(dimension) +
                                                   " lengthscales, got " +
                                                   std::to_string(lengthscales.size()));
  }
  for (double l : lengthscales) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorCode::kInvalidConfig, "lengthscales must be positive");
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw Error(ErrorCode::kInvalidConfig, "signal_variance must be positive");
  }
  if (!(jitter > 0.0) || !std::isfinite(jitter)) throw Error(ErrorCode::kInvalidConfig, "jitter must be positive");
}

NoiseParam::NoiseParam(double c_p) : c_p_(c_p) {
  if (!(c_p > 0.0) || !std::isfinite(c_p)) throw Error(ErrorCode::kInvalidConfig, "c_p must be positive");
}

NoiseParam NoiseParam::default_for(const KernelHyperparams& hp) {
  return NoiseParam(std::sqrt(2.0 * hp.signal_variance));
}

std::size_t PosteriorEstimate::argmax_mean() const {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < mean.size(); ++i) {
    if (mean[i] > mean[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

bool PosteriorEstimate::operator==(const PosteriorEstimate& other) const {
  return actions == other.actions && map_converged == other.map_converged &&
         newton_iterations == other.newton_iterations && mean.size() == other.mean.size() &&
         covariance.rows() == other.covariance.rows() &&
         covariance.cols() == other.covariance.cols() &&
         (mean.array() == other.mean.array()).all() &&
         (covariance.array() == other.covariance.array()).all();
}

double kernel_eval(const Action& x, const Action& y, const KernelHyperparams& hp) {
  if (x.size() != y.size() || x.size() != hp.lengthscales.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "kernel arguments and lengthscales disagree in length");
  }
  double r2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = (x[j] - y[j]) / hp.lengthscales[j];
    r2 += d * d;
  }
  return hp.signal_variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd prior_covariance(std::span<const Action> actions, const KernelHyperparams& hp) {
  const auto k = static_cast<Eigen::Index>(actions.size());
  Eigen::MatrixXd K(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    K(i, i) = kernel_eval(actions[i], actions[i], hp) + hp.jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) = kernel_eval(actions[i], actions[j], hp);
    }
  }
  return K;
}

double link_g(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_link_g(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

std::vector<IndexedPreference> index_preferences(std::span<const Action> actions,
                                                 std::span<const PreferenceRecord> prefs) {
  std::map<Action, std::size_t> position;
  for (std::size_t i = 0; i < actions.size(); ++i) position.emplace(actions[i], i);
  auto find = [&](const Action& a) {
    auto it = position.find(a);
    if (it == position.end()) {
      throw Error(ErrorCode::kUnknownAction, "preference references an action outside the set");
    }
    return it->second;
  };
  std::vector<IndexedPreference> out;
  out.reserve(prefs.size());
  for (const auto& p : prefs) out.push_back({find(p.preferred), find(p.rejected)});
  return out;
}

double log_likelihood(const Eigen::VectorXd& utilities, std::span<const Action> actions,
                      std::span<const PreferenceRecord> prefs, NoiseParam c_p) {
  if (static_cast<std::size_t>(utilities.size()) != actions.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one utility per action expected");
  }
  double total = 0.0;
  for (const auto& p : index_preferences(actions, prefs)) {
    total += log_link_g((utilities[static_cast<Eigen::Index>(p.preferred)] -
                         utilities[static_cast<Eigen::Index>(p.rejected)]) /
                        c_p.value());
  }
  return total;
}

PreferenceLogPosterior::PreferenceLogPosterior(Eigen::MatrixXd prior, std::vector<IndexedPreference> prefs,
                                               NoiseParam c_p)
    : prior_(std::move(prior)), prior_llt_(prior_), prefs_(std::move(prefs)), c_p_(c_p.value()) {
  if (prior_llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularPrior, "prior covariance is not positive definite");
  }
  for (const auto& p : prefs_) {
    if (p.preferred >= size() || p.rejected >= size()) {
      throw Error(ErrorCode::kUnknownAction, "preference index outside the prior");
    }
  }
}

double PreferenceLogPosterior::log_likelihood(const Eigen::VectorXd& u) const {
  double total = 0.0;
  for (const auto& p : prefs_) {
    total += log_link_g((u[static_cast<Eigen::Index>(p.preferred)] - u[static_cast<Eigen::Index>(p.rejected)]) / c_p_);
  }
  return total;
}

double PreferenceLogPosterior::value(const Eigen::VectorXd& u) const {
  return log_likelihood(u) - 0.5 * u.dot(prior_llt_.solve(u));
}

Eigen::VectorXd PreferenceLogPosterior::likelihood_gradient(const Eigen::VectorXd& u) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
  for (const auto& p : prefs_) {
    const auto a = static_cast<Eigen::Index>(p.preferred);
    const auto b = static_cast<Eigen::Index>(p.rejected);
    // d/dz log g(z) = g(-z)
    const double s = link_g(-(u[a] - u[b]) / c_p_) / c_p_;
    g[a] += s;
    g[b] -= s;
  }
  return g;
}

Eigen::VectorXd PreferenceLogPosterior::gradient(const Eigen::VectorXd& u) const {
  return likelihood_gradient(u) - prior_llt_.solve(u);
}

Eigen::MatrixXd PreferenceLogPosterior::likelihood_curvature(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(u.size(), u.size());
  for (const auto& p : prefs_) {
    const auto a = static_cast<Eigen::Index>(p.preferred);
    const auto b = static_cast<Eigen::Index>(p.rejected);
    const double z = (u[a] - u[b]) / c_p_;
    const double w = link_g(z) * link_g(-z) / (c_p_ * c_p_);
    lambda(a, a) += w;
    lambda(b, b) += w;
    lambda(a, b) -= w;
    lambda(b, a) -= w;
  }
  return lambda;
}

Eigen::MatrixXd PreferenceLogPosterior::hessian(const Eigen::VectorXd& u) const {
  const Eigen::MatrixXd prior_inv = prior_llt_.solve(Eigen::MatrixXd::Identity(u.size(), u.size()));
  return -likelihood_curvature(u) - prior_inv;
}

namespace {

Eigen::MatrixXd clip_to_psd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

// Factorizes the prior, adding diagonal jitter in decades until it succeeds.
Eigen::MatrixXd conditioned_prior(Eigen::MatrixXd K, const KernelHyperparams& hp,
                                  std::size_t escalations) {
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  double extra = hp.jitter;
  for (std::size_t attempt = 0; llt.info() != Eigen::Success; ++attempt) {
    if (attempt == escalations) {
      throw Error(ErrorCode::kSingularPrior, "prior covariance factorization failed after jitter escalation");
    }
    K.diagonal().array() += extra;
    extra *= 10.0;
    llt.compute(K);
  }
  return K;
}

}  // namespace

PosteriorEstimate laplace_posterior(std::span<const Action> actions,
                                    std::span<const PreferenceRecord> prefs,
                                    const KernelHyperparams& hp, NoiseParam c_p,
                                    const LaplaceOptions& options) {
  PosteriorEstimate out;
  out.actions.assign(actions.begin(), actions.end());
  const auto k = static_cast<Eigen::Index>(actions.size());
  if (k == 0) {
    if (!prefs.empty()) throw Error(ErrorCode::kUnknownAction, "preferences given for an empty action set");
    return out;
  }
  hp.validate(actions.front().size());
  if (std::set<Action>(actions.begin(), actions.end()).size() != actions.size()) {
    throw Error(ErrorCode::kInvalidConfig, "posterior actions must be distinct");
  }

  auto indexed = index_preferences(actions, prefs);
  Eigen::MatrixXd K = prior_covariance(actions, hp);
  if (indexed.empty()) {
    out.mean = Eigen::VectorXd::Zero(k);
    out.covariance = std::move(K);
    return out;
  }

  const PreferenceLogPosterior model(conditioned_prior(std::move(K), hp, options.jitter_escalations),
                                     std::move(indexed), c_p);
  const Eigen::MatrixXd L = model.prior_factor().matrixL();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);

  // Newton on whitened utilities w (u = L w), where the prior term is
  // -|w|^2 / 2 and the Hessian I + L' Lambda L is well conditioned.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
  auto whitened_value = [&](const Eigen::VectorXd& wv, const Eigen::VectorXd& uv) {
    return model.log_likelihood(uv) - 0.5 * wv.squaredNorm();
  };

  out.map_converged = false;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    if (model.gradient(u).lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      out.map_converged = true;
      break;
    }
    const Eigen::VectorXd grad_w = L.transpose() * model.likelihood_gradient(u) - w;
    const Eigen::MatrixXd B = I + L.transpose() * model.likelihood_curvature(u) * L;
    const Eigen::VectorXd delta = B.llt().solve(grad_w);

    const double current = whitened_value(w, u);
    // Changes below the rounding of the objective count as non-decreasing;
    // otherwise the last Newton steps near the mode are rejected as noise.
    const double floor = current - 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(current));
    double step = 1.0;
    bool accepted = false;
    for (std::size_t h = 0; h <= options.max_step_halvings; ++h, step *= 0.5) {
      Eigen::VectorXd w_next = w + step * delta;
      Eigen::VectorXd u_next = L * w_next;
      if (whitened_value(w_next, u_next) >= floor) {
        w = std::move(w_next);
        u = std::move(u_next);
        accepted = true;
        break;
      }
    }
    ++out.newton_iterations;
    if (!accepted) break;
  }
  if (!out.map_converged) {
    out.map_converged = model.gradient(u).lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
  }

  const Eigen::MatrixXd lambda = clip_to_psd(model.likelihood_curvature(u));
  const Eigen::MatrixXd B = I + L.transpose() * lambda * L;
  const Eigen::MatrixXd sigma = L * B.llt().solve(L.transpose());
  out.mean = std::move(u);
  out.covariance = 0.5 * (sigma + sigma.transpose());
  return out;
}

}  // namespace prefopt
