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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "prefopt/config.hpp"
#include "prefopt/error.hpp"
#include "prefopt/learner.hpp"
#include "support.hpp"

using namespace prefopt;

namespace {

LearnerConfig gait_config(std::uint64_t seed) {
  return LearnerConfig::defaults_for(ActionSpace(essential_constraint_dimensions()), seed);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidConfig;
}

// One full cycle where the first distinct action is preferred.
void cycle(Learner& learner) {
  const auto p = learner.propose();
  learner.record_execution(p);
  if (p[0] != p[1]) {
    learner.record_preferences({{p[0], p[1], 0, 0}});
  } else {
    learner.record_preferences({});
  }
}

}  // namespace

TEST_CASE("learner: initial state") {
  const Learner learner(gait_config(42));
  const auto& s = learner.state();
  CHECK(learner.config().space.dimension() == 5);
  CHECK(learner.config().n_per_iteration == 2);
  CHECK(s.iteration == 0);
  CHECK(s.executed.empty());
  CHECK(s.dataset.empty());
  CHECK_FALSE(s.incumbent);
  CHECK_FALSE(s.incumbent_posterior);
  CHECK_FALSE(s.pending);
  CHECK(Learner(gait_config(42)).state() == s);
  CHECK_FALSE(Learner(gait_config(43)).state() == s);
}

TEST_CASE("learner: a single action per iteration is rejected") {
  auto config = gait_config(1);
  config.n_per_iteration = 1;
  CHECK(code_of([&] { Learner l(config); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("learner: first proposal is uniform random") {
  Learner learner(gait_config(42));
  const auto p = learner.propose();
  REQUIRE(p.size() == 2);
  Random rng(42);
  CHECK(p == uniform_random_actions(learner.config().space, 2, rng));
  for (const auto& a : p) CHECK(learner.config().space.contains(a));
  CHECK(learner.state().pending->actions == p);
  CHECK(code_of([&] { learner.propose(); }) == ErrorCode::kPendingProposalExists);
}

TEST_CASE("learner: execution bookkeeping") {
  SUBCASE("two new actions grow the executed set by two") {
    Learner learner(gait_config(5));
    auto p = learner.propose();
    REQUIRE(p[0] != p[1]);
    learner.record_execution(p);
    CHECK(learner.state().executed == p);
  }
  SUBCASE("repeats collapse") {
    const ActionSpace tiny({{"x", 0, 1, 1, ""}});
    Learner learner(LearnerConfig::defaults_for(tiny, 0));
    for (int i = 0; i < 6; ++i) cycle(learner);
    CHECK(learner.state().executed.size() <= 2);
    const auto before = learner.state().executed.size();
    auto p = learner.propose();
    learner.record_execution(p);
    const std::set<Action> after(learner.state().executed.begin(), learner.state().executed.end());
    CHECK(after.size() == learner.state().executed.size());
    CHECK(learner.state().executed.size() <= 2);
    CHECK(learner.state().executed.size() >= before);
  }
  SUBCASE("mismatch and missing proposal") {
    Learner learner(gait_config(5));
    CHECK(code_of([&] { learner.record_execution(std::vector<Action>{}); }) == ErrorCode::kNoPendingProposal);
    auto p = learner.propose();
    CHECK(code_of([&] { learner.record_execution(std::vector<Action>{}); }) == ErrorCode::kProposalMismatch);
    std::vector<Action> other{p[1], p[0]};
    if (p[0] != p[1]) {
      CHECK(code_of([&] { learner.record_execution(other); }) == ErrorCode::kProposalMismatch);
    }
    learner.record_execution(p);
    CHECK(code_of([&] { learner.record_execution(p); }) == ErrorCode::kProposalMismatch);
  }
}

TEST_CASE("learner: preferences") {
  Learner learner(gait_config(5));
  CHECK(code_of([&] { learner.record_preferences({}); }) == ErrorCode::kNoPendingProposal);
  auto p = learner.propose();
  CHECK(code_of([&] { learner.record_preferences({}); }) == ErrorCode::kNoPendingProposal);
  learner.record_execution(p);
  REQUIRE(p[0] != p[1]);

  SUBCASE("one preference grows the dataset and sets the incumbent") {
    learner.record_preferences({{p[1], p[0], 0, 0}});
    CHECK(learner.state().dataset.size() == 1);
    CHECK(learner.state().dataset[0].iteration == 1);
    CHECK(learner.state().iteration == 1);
    CHECK(learner.state().incumbent == p[1]);
    CHECK_FALSE(learner.state().pending);
  }
  SUBCASE("no preference still advances and picks the earliest executed") {
    learner.record_preferences({});
    CHECK(learner.state().dataset.empty());
    CHECK(learner.state().iteration == 1);
    CHECK(learner.state().incumbent == p[0]);
    CHECK(learner.state().incumbent_posterior->mean.isZero(0.0));
  }
  SUBCASE("unknown action") {
    const Action stranger = learner.config().space.grid_point(0) == p[0] || learner.config().space.grid_point(0) == p[1]
                                ? learner.config().space.grid_point(1)
                                : learner.config().space.grid_point(0);
    CHECK(code_of([&] { learner.record_preferences({{p[0], stranger, 0, 0}}); }) == ErrorCode::kUnknownAction);
    CHECK(learner.state().pending);
  }
  SUBCASE("identical actions") {
    CHECK(code_of([&] { learner.record_preferences({{p[0], p[0], 0, 0}}); }) ==
          ErrorCode::kPreferenceBetweenIdenticalActions);
  }
}

TEST_CASE("learner: later proposals come from the line and executed set") {
  Learner learner(gait_config(8));
  for (int i = 0; i < 15; ++i) {
    const auto executed_before = learner.state().executed;
    const auto incumbent_before = learner.state().incumbent;
    const auto p = learner.propose();
    const auto& trace = *learner.last_proposal();
    CHECK(trace.iteration == static_cast<std::size_t>(i + 1));
    CHECK(trace.proposals == p);
    if (i > 0) {
      REQUIRE(trace.anchor);
      CHECK(*trace.anchor == *incumbent_before);
      CHECK(std::find(trace.line.begin(), trace.line.end(), *trace.anchor) != trace.line.end());
      std::set<Action> expected(trace.line.begin(), trace.line.end());
      expected.insert(executed_before.begin(), executed_before.end());
      CHECK(std::set<Action>(trace.subset.begin(), trace.subset.end()) == expected);
      CHECK(trace.subset.size() == expected.size());
      for (const auto& a : p) CHECK(std::find(trace.subset.begin(), trace.subset.end(), a) != trace.subset.end());
    }
    learner.record_execution(p);
    if (p[0] != p[1]) {
      learner.record_preferences({{p[0], p[1], 0, 0}});
    } else {
      learner.record_preferences({});
    }
    const auto& s = learner.state();
    CHECK(std::find(s.executed.begin(), s.executed.end(), *s.incumbent) != s.executed.end());
    CHECK(s.executed.size() <= s.iteration * learner.config().n_per_iteration);
    for (const auto& r : s.dataset) {
      CHECK(std::find(s.executed.begin(), s.executed.end(), r.preferred) != s.executed.end());
      CHECK(std::find(s.executed.begin(), s.executed.end(), r.rejected) != s.executed.end());
    }
  }
}

TEST_CASE("learner: two posterior computations per iteration after the first") {
  Learner learner(gait_config(3));
  std::map<std::size_t, std::vector<PosteriorStage>> seen;
  learner.set_posterior_observer([&](PosteriorStage stage, std::size_t iteration, const PosteriorEstimate&) {
    seen[iteration].push_back(stage);
  });
  for (int i = 0; i < 10; ++i) cycle(learner);
  CHECK(seen[1] == std::vector{PosteriorStage::kIncumbent});
  for (std::size_t i = 2; i <= 10; ++i) {
    CHECK(seen[i] == std::vector{PosteriorStage::kProposal, PosteriorStage::kIncumbent});
  }
}

TEST_CASE("learner: single preference over two actions makes the preferred one incumbent") {
  const ActionSpace space({{"x", 0, 4, 1, ""}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Learner learner(LearnerConfig::defaults_for(space, seed));
    const auto p = learner.propose();
    learner.record_execution(p);
    if (p[0] == p[1]) continue;
    learner.record_preferences({{p[1], p[0], 0, 0}});
    CHECK(learner.state().incumbent == p[1]);
    const auto& post = *learner.state().incumbent_posterior;
    CHECK(post.mean[1] > post.mean[0]);
  }
}

TEST_CASE("learner: identical seeds and preferences replay identically") {
  Learner a(gait_config(77)), b(gait_config(77));
  for (int i = 0; i < 20; ++i) {
    cycle(a);
    cycle(b);
    CHECK(a.state() == b.state());
  }
  CHECK(a.state().executed.size() <= 40);
}

TEST_CASE("mvn sampling") {
  SUBCASE("zero covariance returns the mean") {
    Eigen::VectorXd m(3);
    m << 1.5, -2.0, 0.25;
    Random rng(1);
    CHECK(sample_mvn(m, Eigen::MatrixXd::Zero(3, 3), rng) == m);
  }
  SUBCASE("sample mean converges") {
    Eigen::VectorXd m(2);
    m << 0.3, -1.0;
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 0.6, 0.6, 0.5;
    Random rng(2);
    const MvnSampler sampler(m, s);
    const int n = 100000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < n; ++i) acc += sampler.draw(rng);
    acc /= n;
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(acc[j] - m[j]) <= 4 * std::sqrt(s(j, j) / n));
  }
  SUBCASE("reproducible with a seed") {
    Random r1(3), r2(3);
    const Eigen::VectorXd m = Eigen::VectorXd::Zero(4);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
    CHECK(sample_mvn(m, id, r1) == sample_mvn(m, id, r2));
  }
  SUBCASE("singular covariance falls back to the eigen factor") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 1.0, 1.0, 1.0;
    const MvnSampler sampler(Eigen::VectorXd::Zero(2), s);
    CHECK((sampler.factor() * sampler.factor().transpose() - s).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("asymmetric covariance is rejected") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.5, 0.0, 1.0;
    Random rng(4);
    CHECK(code_of([&] { sample_mvn(Eigen::VectorXd::Zero(2), s, rng); }) == ErrorCode::kNonSymmetricCovariance);
  }
}

TEST_CASE("thompson selection: deterministic samples pick the strict maximum") {
  Eigen::VectorXd strict(3);
  strict << 0.1, 0.2, 0.9;
  Random r0(6);
  CHECK(thompson_select(strict, Eigen::MatrixXd::Zero(3, 3), 2, r0) == std::vector<std::size_t>{2, 2});

  // Ties resolve to the lowest index.
  Eigen::VectorXd m(4);
  m << 0.1, 0.7, 0.3, 0.7;
  Random rng(5);
  const auto picks = thompson_select(m, Eigen::MatrixXd::Zero(4, 4), 5, rng);
  CHECK(picks == std::vector<std::size_t>(5, 1));
}
