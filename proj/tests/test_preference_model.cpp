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

#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "prefopt/error.hpp"
#include "prefopt/preference_model.hpp"
#include "support.hpp"

using namespace prefopt;
namespace pt = prefopt::testing;

namespace {

KernelHyperparams unit_hp(std::size_t v) { return {std::vector<double>(v, 1.0), 1.0, 1e-6}; }

double rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-300);
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

std::vector<IndexedPreference> indexed(const pt::Instance& inst) {
  return index_preferences(inst.actions, inst.prefs);
}

}  // namespace

TEST_CASE("kernel: values and symmetry") {
  const KernelHyperparams hp = unit_hp(1);
  const Action x{{0.0}}, y{{1.0}};
  CHECK(kernel_eval(x, x, hp) == hp.signal_variance);
  CHECK(kernel_eval(x, y, hp) == kernel_eval(y, x, hp));
  // exp(-1/2) to 16 digits.
  CHECK(kernel_eval(x, y, hp) == doctest::Approx(0.6065306597126334).epsilon(1e-15));

  const KernelHyperparams hp3{{0.5, 2.0, 1.5}, 3e-4, 1e-6};
  const Action a{{0.1, -0.4, 2.0}}, b{{0.35, 0.9, 1.1}};
  const double oracle = static_cast<double>(pt::oracle_kernel(a, b, hp3.lengthscales, hp3.signal_variance));
  CHECK(kernel_eval(a, b, hp3) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(kernel_eval(a, b, hp3) > 0.0);
  CHECK(kernel_eval(a, b, hp3) <= hp3.signal_variance);
}

TEST_CASE("kernel: dimension mismatch") {
  CHECK_THROWS_AS(kernel_eval(Action{{0.0}}, Action{{0.0, 1.0}}, unit_hp(1)), Error);
  CHECK_THROWS_AS(kernel_eval(Action{{0.0, 1.0}}, Action{{0.0, 1.0}}, unit_hp(1)), Error);
}

TEST_CASE("prior covariance") {
  const KernelHyperparams hp{{0.1}, 1e-4, 1e-6};
  SUBCASE("single action") {
    const std::vector<Action> one{Action{{0.0}}};
    const auto k = prior_covariance(one, hp);
    REQUIRE(k.rows() == 1);
    CHECK(k(0, 0) == hp.signal_variance + hp.jitter);
  }
  SUBCASE("far apart actions decorrelate") {
    const std::vector<Action> two{Action{{0.0}}, Action{{100.0}}};
    const auto k = prior_covariance(two, hp);
    CHECK(k(0, 1) == doctest::Approx(0.0));
    CHECK(k(0, 0) == hp.signal_variance + hp.jitter);
    CHECK(k(1, 1) == hp.signal_variance + hp.jitter);
  }
  SUBCASE("random sets factor") {
    std::mt19937_64 gen(8);
    for (int t = 0; t < 50; ++t) {
      auto inst = pt::random_instance(gen, 5, 0);
      const auto k = prior_covariance(inst.actions, inst.hp);
      CHECK(k.isApprox(k.transpose(), 0.0));
      CHECK(Eigen::LLT<Eigen::MatrixXd>(k).info() == Eigen::Success);
    }
  }
}

TEST_CASE("link function") {
  CHECK(link_g(0.0) == 0.5);
  CHECK(link_g(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  CHECK(log_link_g(1.0) == doctest::Approx(-0.31326168751822283).epsilon(1e-15));
  for (double x : {-30.0, -3.0, -0.2, 0.7, 5.0, 40.0}) {
    CHECK(link_g(x) + link_g(-x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(log_link_g(x) == doctest::Approx(static_cast<double>(std::log(pt::oracle_sigmoid(x)))).epsilon(1e-13));
  }
  CHECK(std::isfinite(log_link_g(-800.0)));
  CHECK(log_link_g(-800.0) == doctest::Approx(-800.0));
  double prev = link_g(-10.0);
  for (double x = -9.9; x < 10.0; x += 0.1) {
    CHECK(link_g(x) >= prev);
    prev = link_g(x);
  }
}

TEST_CASE("log likelihood") {
  const std::vector<Action> acts{Action{{0.0}}, Action{{1.0}}};
  const NoiseParam c(0.2);
  Eigen::VectorXd u(2);
  u << 0.3, 0.3;
  CHECK(log_likelihood(u, acts, {}, c) == 0.0);
  const std::vector<PreferenceRecord> prefs{{acts[0], acts[1], 0, 0}};
  CHECK(log_likelihood(u, acts, prefs, c) == doctest::Approx(-0.6931471805599453).epsilon(1e-15));
  u << 0.5, 0.3;  // difference equals c_p
  CHECK(log_likelihood(u, acts, prefs, c) == doctest::Approx(-0.31326168751822283).epsilon(1e-14));
  CHECK(log_likelihood(u, acts, prefs, c) <= 0.0);

  const std::vector<PreferenceRecord> stranger{{acts[0], Action{{2.0}}, 0, 0}};
  try {
    log_likelihood(u, acts, stranger, c);
    FAIL("expected UnknownAction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownAction);
  }
}

TEST_CASE("property: log likelihood ignores a common shift") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> z;
  for (int t = 0; t < 200; ++t) {
    const auto inst = pt::random_instance(gen, 8, 5);
    Eigen::VectorXd u(static_cast<Eigen::Index>(inst.actions.size()));
    for (auto& x : u) x = z(gen);
    const double shift = 10 * z(gen);
    const NoiseParam c(inst.c_p);
    CHECK(log_likelihood(u.array() + shift, inst.actions, inst.prefs, c) ==
          doctest::Approx(log_likelihood(u, inst.actions, inst.prefs, c)).epsilon(1e-9));
  }
}

TEST_CASE("noise parameter must be positive") {
  CHECK_THROWS_AS(NoiseParam(0.0), Error);
  CHECK_THROWS_AS(NoiseParam(-1.0), Error);
  CHECK_THROWS_AS(NoiseParam(std::nan("")), Error);
  CHECK(NoiseParam::default_for({{1.0}, 1e-4, 1e-6}).value() == doctest::Approx(std::sqrt(2e-4)));
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS((KernelHyperparams{{1.0, 0.0}, 1e-4, 1e-6}.validate(2)), Error);
  CHECK_THROWS_AS((KernelHyperparams{{1.0}, 0.0, 1e-6}.validate(1)), Error);
  CHECK_THROWS_AS((KernelHyperparams{{1.0}, 1e-4, 0.0}.validate(1)), Error);
  CHECK_THROWS_AS((KernelHyperparams{{1.0}, 1e-4, 1e-6}.validate(2)), Error);
  const ActionSpace space(essential_constraint_dimensions());
  const auto hp = KernelHyperparams::defaults_for(space);
  for (std::size_t j = 0; j < space.dimension(); ++j) CHECK(hp.lengthscales[j] == space.dim(j).range() / 2);
  CHECK(hp.signal_variance == 1e-4);
  CHECK(hp.jitter == 1e-6);
}

TEST_CASE("laplace: empty dataset returns the prior") {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 20; ++t) {
    const auto inst = pt::random_instance(gen, 10, 0);
    const auto post = laplace_posterior(inst.actions, {}, inst.hp, NoiseParam(inst.c_p));
    CHECK(post.mean.isZero(0.0));
    CHECK(post.covariance == prior_covariance(inst.actions, inst.hp));
    CHECK(post.map_converged);
  }
}

TEST_CASE("laplace: one preference orders the means and matches a grid search") {
  const KernelHyperparams hp{{0.1}, 1e-4, 1e-6};
  const std::vector<Action> acts{Action{{0.0}}, Action{{5.0}}};
  const NoiseParam c = NoiseParam::default_for(hp);
  const std::vector<PreferenceRecord> prefs{{acts[0], acts[1], 1, 0}};
  const auto post = laplace_posterior(acts, prefs, hp, c);
  CHECK(post.map_converged);
  CHECK(post.mean[0] > post.mean[1]);
  CHECK(post.argmax_mean() == 0);

  const auto k = prior_covariance(acts, hp);
  const pt::TwoPointPosterior f{k(0, 0), k(0, 1), k(1, 1), c.value()};
  const double sigma = std::sqrt(hp.signal_variance);
  const auto [g1, g2] = pt::grid_argmax_2d(f, 3 * sigma, 1e-3);
  CHECK(std::abs(post.mean[0] - g1) <= 2e-3);
  CHECK(std::abs(post.mean[1] - g2) <= 2e-3);

  // Same check at unit scale, where the grid is fine relative to the mode.
  const KernelHyperparams unit{{0.7}, 1.0, 1e-6};
  const std::vector<Action> near{Action{{0.0}}, Action{{0.5}}};
  const NoiseParam cu(0.4);
  const std::vector<PreferenceRecord> p2{{near[1], near[0], 1, 0}};
  const auto post2 = laplace_posterior(near, p2, unit, cu);
  const auto ku = prior_covariance(near, unit);
  // The oracle scores "first over second", so swap roles.
  const pt::TwoPointPosterior fu{ku(1, 1), ku(0, 1), ku(0, 0), cu.value()};
  const auto [h1, h0] = pt::grid_argmax_2d(fu, 3.0, 1e-3);
  CHECK(std::abs(post2.mean[1] - h1) <= 2e-3);
  CHECK(std::abs(post2.mean[0] - h0) <= 2e-3);
}

TEST_CASE("laplace: gradient vanishes at a converged mode") {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 300; ++t) {
    const auto inst = pt::random_instance(gen, 10, 5);
    const auto post = laplace_posterior(inst.actions, inst.prefs, inst.hp, NoiseParam(inst.c_p));
    REQUIRE(post.map_converged);
    const PreferenceLogPosterior lp(prior_covariance(inst.actions, inst.hp), indexed(inst), NoiseParam(inst.c_p));
    CHECK(lp.gradient(post.mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(post.mean.allFinite());
  }
}

TEST_CASE("laplace: analytic derivatives agree with central differences") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> z;
  const double h = 1e-5;
  for (int t = 0; t < 200; ++t) {
    const auto inst = pt::random_instance(gen, 10, 3);
    const PreferenceLogPosterior lp(prior_covariance(inst.actions, inst.hp), indexed(inst), NoiseParam(inst.c_p));
    const Eigen::Index k = static_cast<Eigen::Index>(lp.size());
    const double sigma = std::sqrt(inst.hp.signal_variance);
    Eigen::VectorXd u(k);
    for (auto& x : u) x = sigma * z(gen);

    const double step = h;
    Eigen::VectorXd grad_fd(k);
    Eigen::MatrixXd hess_fd(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::VectorXd up = u, dn = u;
      up[i] += step;
      dn[i] -= step;
      grad_fd[i] = (lp.value(up) - lp.value(dn)) / (2 * step);
      hess_fd.col(i) = (lp.gradient(up) - lp.gradient(dn)) / (2 * step);
    }
    CHECK(rel_error(lp.gradient(u), grad_fd) < 1e-4);
    CHECK(rel_error(lp.hessian(u), hess_fd) < 1e-4);
    CHECK(rel_error(lp.likelihood_gradient(u), lp.gradient(u) + lp.prior_factor().solve(u)) < 1e-9);
  }
}

TEST_CASE("property: posterior covariance is symmetric and PSD") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 1000; ++t) {
    const auto inst = pt::random_instance(gen, 10, 5);
    const auto post = laplace_posterior(inst.actions, inst.prefs, inst.hp, NoiseParam(inst.c_p));
    const auto& s = post.covariance;
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff() >= -1e-8);
    CHECK(post.mean.allFinite());
  }
}

TEST_CASE("property: adding a preference never lowers the preferred action's lead") {
  std::mt19937_64 gen(64);
  for (int t = 0; t < 100; ++t) {
    auto inst = pt::random_instance(gen, 6, 4);
    const NoiseParam c(inst.c_p);
    std::uniform_int_distribution<std::size_t> pick(0, inst.actions.size() - 1);
    const std::size_t a = pick(gen);
    std::size_t b = pick(gen);
    while (b == a) b = pick(gen);
    const auto before = laplace_posterior(inst.actions, inst.prefs, inst.hp, c);
    auto more = inst.prefs;
    more.push_back({inst.actions[a], inst.actions[b], 0, 0});
    const auto after = laplace_posterior(inst.actions, more, inst.hp, c);
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    const double tol = 1e-9 * std::sqrt(inst.hp.signal_variance);
    CHECK(after.mean[ia] - after.mean[ib] >= before.mean[ia] - before.mean[ib] - tol);
  }
}

TEST_CASE("laplace: covariance equals the inverse of prior precision plus curvature") {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 50; ++t) {
    const auto inst = pt::random_instance(gen, 8, 5);
    const auto post = laplace_posterior(inst.actions, inst.prefs, inst.hp, NoiseParam(inst.c_p));
    const auto k = prior_covariance(inst.actions, inst.hp);
    const PreferenceLogPosterior lp(k, indexed(inst), NoiseParam(inst.c_p));
    const Eigen::MatrixXd precision = k.inverse() + lp.likelihood_curvature(post.mean);
    const Eigen::MatrixXd expected = precision.inverse();
    CHECK(rel_error(expected, post.covariance) < 1e-6);
  }
}

TEST_CASE("laplace: duplicate actions and unknown endpoints are rejected") {
  const KernelHyperparams hp{{1.0}, 1e-4, 1e-6};
  const NoiseParam c(0.01);
  const std::vector<Action> dup{Action{{0.0}}, Action{{0.0}}};
  CHECK_THROWS_AS(laplace_posterior(dup, {}, hp, c), Error);
  const std::vector<Action> acts{Action{{0.0}}, Action{{1.0}}};
  const std::vector<PreferenceRecord> bad{{acts[0], Action{{3.0}}, 0, 0}};
  CHECK_THROWS_AS(laplace_posterior(acts, bad, hp, c), Error);
}

TEST_CASE("posterior estimate: argmax ties go to the earliest index") {
  PosteriorEstimate p;
  p.mean = Eigen::VectorXd::Zero(4);
  CHECK(p.argmax_mean() == 0);
  p.mean << 0.0, 2.0, 2.0, 1.0;
  CHECK(p.argmax_mean() == 1);
}
