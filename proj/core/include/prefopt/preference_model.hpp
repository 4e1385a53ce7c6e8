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

#ifndef PREFOPT_PREFERENCE_MODEL_HPP
#define PREFOPT_PREFERENCE_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "prefopt/action_space.hpp"

namespace prefopt {

/// Squared-exponential kernel parameters. Lengthscales are in dimension units.
struct KernelHyperparams {
  std::vector<double> lengthscales;
  double signal_variance = 1e-4;
  double jitter = 1e-6;

  /// Half-range lengthscale per dimension, signal variance 1e-4, jitter 1e-6.
  static KernelHyperparams defaults_for(const ActionSpace& space);
  /// Throws kInvalidConfig (nonpositive values) or kDimensionMismatch.
  void validate(std::size_t dimension) const;

  bool operator==(const KernelHyperparams&) const = default;
};

/// Preference noise scale c_p > 0.
class NoiseParam {
 public:
  /// Throws kInvalidConfig unless c_p is finite and positive.
  explicit NoiseParam(double c_p);
  /// sqrt(2 * signal_variance)
  static NoiseParam default_for(const KernelHyperparams& hp);

  double value() const { return c_p_; }
  bool operator==(const NoiseParam&) const = default;

 private:
  double c_p_;
};

struct PreferenceRecord {
  Action preferred;
  Action rejected;
  std::size_t iteration = 0;
  std::int64_t timestamp_ms = 0;

  bool operator==(const PreferenceRecord&) const = default;
};

/// Laplace approximation N(mean, covariance) over a finite action list.
struct PosteriorEstimate {
  std::vector<Action> actions;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  bool map_converged = true;
  std::size_t newton_iterations = 0;

  Eigen::VectorXd variances() const { return covariance.diagonal(); }
  /// Index of the largest mean; ties resolve to the earliest index.
  std::size_t argmax_mean() const;

  bool operator==(const PosteriorEstimate& other) const;
};

double kernel_eval(const Action& x, const Action& y, const KernelHyperparams& hp);

/// Gram matrix plus jitter on the diagonal.
Eigen::MatrixXd prior_covariance(std::span<const Action> actions, const KernelHyperparams& hp);

/// Logistic link 1 / (1 + exp(-x)).
double link_g(double x);
/// log g(x), stable for large |x|.
double log_link_g(double x);

/// Preference expressed as positions in an action list.
struct IndexedPreference {
  std::size_t preferred;
  std::size_t rejected;
};

/// Throws kUnknownAction if an endpoint is absent from `actions`.
std::vector<IndexedPreference> index_preferences(std::span<const Action> actions,
                                                 std::span<const PreferenceRecord> prefs);

/// Sum over preferences of log g((U(preferred) - U(rejected)) / c_p).
double log_likelihood(const Eigen::VectorXd& utilities, std::span<const Action> actions,
                      std::span<const PreferenceRecord> prefs, NoiseParam c_p);

/// Unnormalized log posterior over utilities,
///   sum_p log g((u_p+ - u_p-) / c_p) - 1/2 u' K^-1 u,
/// with analytic derivatives.
class PreferenceLogPosterior {
 public:
  /// Throws kSingularPrior if `prior` is not positive definite.
  PreferenceLogPosterior(Eigen::MatrixXd prior, std::vector<IndexedPreference> prefs, NoiseParam c_p);

  std::size_t size() const { return static_cast<std::size_t>(prior_.rows()); }
  const Eigen::MatrixXd& prior() const { return prior_; }
  const Eigen::LLT<Eigen::MatrixXd>& prior_factor() const { return prior_llt_; }

  double log_likelihood(const Eigen::VectorXd& u) const;
  double value(const Eigen::VectorXd& u) const;
  Eigen::VectorXd likelihood_gradient(const Eigen::VectorXd& u) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  /// Hessian of the negative log likelihood (the PSD matrix often written Lambda).
  Eigen::MatrixXd likelihood_curvature(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& u) const;

 private:
  Eigen::MatrixXd prior_;
  Eigen::LLT<Eigen::MatrixXd> prior_llt_;
  std::vector<IndexedPreference> prefs_;
  double c_p_;
};

struct LaplaceOptions {
  std::size_t max_iterations = 100;
  double gradient_tolerance = 1e-6;
  std::size_t max_step_halvings = 60;
  /// Prior factorization retries, each multiplying the extra jitter by 10.
  std::size_t jitter_escalations = 6;
};

/// Laplace approximation of the preference posterior at `actions`.
///
/// The mode is found by damped Newton iteration from u = 0; the covariance is
/// (K^-1 + Lambda)^-1 with Lambda the likelihood curvature at the mode
/// (symmetrized, eigenvalues clipped at zero). Failure to reach the gradient
/// tolerance is reported through `map_converged`, not thrown. With no
/// preferences the prior is returned unchanged.
PosteriorEstimate laplace_posterior(std::span<const Action> actions,
                                    std::span<const PreferenceRecord> prefs,
                                    const KernelHyperparams& hp, NoiseParam c_p,
                                    const LaplaceOptions& options = {});

}  // namespace prefopt

#endif  // PREFOPT_PREFERENCE_MODEL_HPP
