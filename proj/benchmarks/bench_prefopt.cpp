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

#include <benchmark/benchmark.h>

#include <random>

#include "prefopt/config.hpp"
#include "prefopt/learner.hpp"
#include "prefopt/preference_model.hpp"
#include "prefopt/simulation.hpp"

namespace {

using namespace prefopt;

const ActionSpace& gait_space() {
  static const ActionSpace space(essential_constraint_dimensions());
  return space;
}

// k distinct gait actions with one preference per consecutive pair.
void laplace(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Random rng(1);
  std::vector<Action> actions;
  while (actions.size() < k) {
    const Action a = gait_space().grid_point(rng.uniform_index(gait_space().grid_size()));
    if (std::find(actions.begin(), actions.end(), a) == actions.end()) actions.push_back(a);
  }
  std::vector<PreferenceRecord> prefs;
  for (std::size_t i = 1; i < k; ++i) prefs.push_back({actions[i - 1], actions[i], i, 0});
  const auto hp = KernelHyperparams::defaults_for(gait_space());
  const auto c = NoiseParam::default_for(hp);
  for (auto _ : state) benchmark::DoNotOptimize(laplace_posterior(actions, prefs, hp, c));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(k));
}
BENCHMARK(laplace)->RangeMultiplier(2)->Range(4, 256)->Complexity();

void line(benchmark::State& state) {
  Random rng(2);
  const Action anchor = gait_space().grid_point(3000);
  for (auto _ : state) benchmark::DoNotOptimize(random_line(gait_space(), anchor, rng));
}
BENCHMARK(line);

// One propose / execute / judge cycle after `range(0)` completed iterations.
void iteration(benchmark::State& state) {
  const auto warmup = static_cast<std::size_t>(state.range(0));
  const auto config = LearnerConfig::defaults_for(gait_space(), 3);
  const auto u = make_utility({}, gait_space(), 3);
  Learner base(config);
  Random judge(4);
  auto step = [&](Learner& l) {
    const auto p = l.propose();
    l.record_execution(p);
    if (p[0] == p[1]) {
      l.record_preferences({});
      return;
    }
    const auto v = simulated_preference(u, p[0], p[1], config.c_p, true, judge);
    if (v == Verdict::kNoPreference) {
      l.record_preferences({});
    } else {
      l.record_preferences({v == Verdict::kPreferFirst ? PreferenceRecord{p[0], p[1], 0, 0}
                                                       : PreferenceRecord{p[1], p[0], 0, 0}});
    }
  };
  for (std::size_t i = 0; i < warmup; ++i) step(base);
  for (auto _ : state) {
    state.PauseTiming();
    Learner l = base;
    state.ResumeTiming();
    step(l);
  }
}
BENCHMARK(iteration)->Arg(1)->Arg(10)->Arg(50)->Arg(200);

void experiment(benchmark::State& state) {
  const auto config = LearnerConfig::defaults_for(gait_space(), 5);
  const auto u = make_utility({}, gait_space(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(config, u, 50, JudgeNoise::kNoiseless));
}
BENCHMARK(experiment)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
