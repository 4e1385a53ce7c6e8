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

#include "prefopt/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "prefopt/error.hpp"

namespace prefopt {

std::string_view to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::kNegDistance: return "negdistance";
    case UtilityKind::kQuadratic: return "quadratic";
    case UtilityKind::kMultimodal: return "multimodal";
  }
  return "negdistance";
}

UtilityKind parse_utility_kind(std::string_view text) {
  if (text == "negdistance") return UtilityKind::kNegDistance;
  if (text == "quadratic") return UtilityKind::kQuadratic;
  if (text == "multimodal") return UtilityKind::kMultimodal;
  throw Error(ErrorCode::kInvalidConfig, "unknown utility kind '" + std::string(text) + "'");
}

SyntheticUtility::SyntheticUtility(UtilityKind kind, const ActionSpace& space, Action optimum)
    : kind_(kind), space_(space), optimum_(std::move(optimum)) {
  space_.validate(optimum_);
}

SyntheticUtility SyntheticUtility::negdistance(const ActionSpace& space, Action optimum) {
  SyntheticUtility u(UtilityKind::kNegDistance, space, std::move(optimum));
  u.compute_extremes();
  return u;
}

SyntheticUtility SyntheticUtility::quadratic(const ActionSpace& space, Action optimum, std::vector<double> weights) {
  SyntheticUtility u(UtilityKind::kQuadratic, space, std::move(optimum));
  if (weights.empty()) weights.assign(space.dimension(), 1.0);
  if (weights.size() != space.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "one quadratic weight per dimension expected");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::kInvalidConfig, "quadratic weights must be positive");
  }
  u.params_ = std::move(weights);
  u.compute_extremes();
  return u;
}

SyntheticUtility SyntheticUtility::multimodal(const ActionSpace& space, Action optimum, Action secondary,
                                              double secondary_weight, double width) {
  SyntheticUtility u(UtilityKind::kMultimodal, space, std::move(optimum));
  space.validate(secondary);
  if (secondary == u.optimum_) throw Error(ErrorCode::kInvalidConfig, "multimodal centers must differ");
  if (!(secondary_weight > 0.0 && secondary_weight < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "secondary weight must lie in (0, 1)");
  }
  if (!(width > 0.0)) throw Error(ErrorCode::kInvalidConfig, "bump width must be positive");
  u.secondary_ = std::move(secondary);
  u.params_ = {secondary_weight, width};
  u.compute_extremes();
  return u;
}

double SyntheticUtility::normalized_distance(const Action& a, const Action& b) const {
  double s = 0.0;
  for (std::size_t j = 0; j < space_.dimension(); ++j) {
    const double d = (a[j] - b[j]) / space_.dim(j).range();
    s += d * d;
  }
  return std::sqrt(s);
}

double SyntheticUtility::raw_value(const Action& a) const {
  switch (kind_) {
    case UtilityKind::kNegDistance:
      return -normalized_distance(a, optimum_);
    case UtilityKind::kQuadratic: {
      double s = 0.0;
      for (std::size_t j = 0; j < space_.dimension(); ++j) {
        const double d = (a[j] - optimum_[j]) / space_.dim(j).range();
        s += params_[j] * d * d;
      }
      return -s;
    }
    case UtilityKind::kMultimodal: {
      const double width = params_[1];
      return std::exp(-normalized_distance(a, optimum_) / width) +
             params_[0] * std::exp(-normalized_distance(a, *secondary_) / width);
    }
  }
  return 0.0;
}

void SyntheticUtility::compute_extremes() {
  max_value_ = raw_value(optimum_);
  double lowest = max_value_;
  const std::uint64_t total = space_.grid_size();
  if (total <= 2'000'000) {
    for (std::uint64_t i = 0; i < total; ++i) lowest = std::min(lowest, raw_value(space_.grid_point(i)));
  } else {
    // Every kind here attains its minimum at a corner of the box.
    const std::size_t v = space_.dimension();
    std::vector<std::size_t> index(v);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << std::min<std::size_t>(v, 20)); ++mask) {
      for (std::size_t j = 0; j < v; ++j) index[j] = (mask >> j & 1U) ? space_.dim(j).point_count() - 1 : 0;
      lowest = std::min(lowest, raw_value(space_.from_index(index)));
    }
  }
  value_range_ = max_value_ - lowest;
  if (!(value_range_ > 0.0)) value_range_ = 1.0;
}

double SyntheticUtility::operator()(const Action& a) const {
  space_.validate(a);
  return raw_value(a);
}

double eval_utility(const SyntheticUtility& u, const Action& a) { return u(a); }

SyntheticUtility make_utility(const UtilitySpec& spec, const ActionSpace& space, std::uint64_t seed) {
  Random rng(Random::derive_seed(seed, 2));
  Action optimum = spec.optimum ? *spec.optimum : space.grid_point(rng.uniform_index(space.grid_size()));
  switch (spec.kind) {
    case UtilityKind::kNegDistance:
      return SyntheticUtility::negdistance(space, std::move(optimum));
    case UtilityKind::kQuadratic:
      return SyntheticUtility::quadratic(space, std::move(optimum), spec.weights);
    case UtilityKind::kMultimodal: {
      Action secondary;
      do {
        secondary = space.grid_point(rng.uniform_index(space.grid_size()));
      } while (secondary == optimum);
      return SyntheticUtility::multimodal(space, std::move(optimum), std::move(secondary));
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown utility kind");
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPreferFirst: return "prefer_first";
    case Verdict::kPreferSecond: return "prefer_second";
    case Verdict::kNoPreference: return "no_preference";
  }
  return "no_preference";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "prefer_first") return Verdict::kPreferFirst;
  if (text == "prefer_second") return Verdict::kPreferSecond;
  if (text == "no_preference") return Verdict::kNoPreference;
  return std::nullopt;
}

Verdict simulated_preference(const SyntheticUtility& u, const Action& a, const Action& b, NoiseParam c_p,
                             bool noiseless, Random& rng) {
  if (a == b) throw Error(ErrorCode::kIdenticalActions, "cannot judge an action against itself");
  const double ua = u(a);
  const double ub = u(b);
  if (noiseless) {
    if (ua > ub) return Verdict::kPreferFirst;
    if (ub > ua) return Verdict::kPreferSecond;
    return Verdict::kNoPreference;
  }
  return rng.uniform01() < link_g((ua - ub) / c_p.value()) ? Verdict::kPreferFirst : Verdict::kPreferSecond;
}

ExperimentReport run_experiment(const LearnerConfig& config, const SyntheticUtility& u, std::size_t iterations,
                                JudgeNoise judge_noise, const ExperimentHooks& hooks) {
  if (!(u.space() == config.space)) {
    throw Error(ErrorCode::kInvalidConfig, "utility and learner use different action spaces");
  }
  const auto start = std::chrono::steady_clock::now();
  StubExecutor stub;
  ActionExecutor& executor = hooks.executor ? *hooks.executor : stub;

  Learner learner(config);
  if (hooks.posterior_observer) learner.set_posterior_observer(hooks.posterior_observer);
  Random judge_rng(Random::derive_seed(config.seed, 1));
  const bool noiseless = judge_noise == JudgeNoise::kNoiseless;

  ExperimentReport report;
  report.seed = config.seed;
  report.iterations = iterations;
  report.optimum = u.optimum();
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto proposals = learner.propose();
    executor.execute(proposals);
    learner.record_execution(proposals);

    std::vector<PreferenceRecord> prefs;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      for (std::size_t j = i + 1; j < proposals.size(); ++j) {
        if (proposals[i] == proposals[j]) continue;
        switch (simulated_preference(u, proposals[i], proposals[j], config.c_p, noiseless, judge_rng)) {
          case Verdict::kPreferFirst:
            prefs.push_back({proposals[i], proposals[j]});
            break;
          case Verdict::kPreferSecond:
            prefs.push_back({proposals[j], proposals[i]});
            break;
          case Verdict::kNoPreference:
            break;
        }
      }
    }
    learner.record_preferences(std::move(prefs));

    const Action& incumbent = *learner.state().incumbent;
    const double regret = u.max_value() - u(incumbent);
    report.regret_curve.push_back(regret);
    report.normalized_regret_curve.push_back(regret / u.value_range());
    report.incumbent_curve.push_back(incumbent);
    if (hooks.on_iteration) hooks.on_iteration(learner);
  }

  report.unique_actions = learner.state().executed.size();
  if (learner.state().incumbent) {
    report.final_incumbent = *learner.state().incumbent;
    report.final_distance = u.normalized_distance(report.final_incumbent, u.optimum());
  }
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BatchSummary summarize(std::span<const ExperimentReport> reports, double success_threshold) {
  BatchSummary s;
  s.repeats = reports.size();
  s.success_threshold = success_threshold;
  if (reports.empty()) return s;
  s.iterations = reports.front().iterations;

  std::vector<double> regret, normalized, distance, unique;
  std::size_t successes = 0;
  for (const auto& r : reports) {
    regret.push_back(r.regret_curve.empty() ? 0.0 : r.regret_curve.back());
    normalized.push_back(r.normalized_regret_curve.empty() ? 0.0 : r.normalized_regret_curve.back());
    distance.push_back(r.final_distance);
    unique.push_back(static_cast<double>(r.unique_actions));
    if (r.final_distance <= success_threshold) ++successes;
  }
  s.success_fraction = static_cast<double>(successes) / static_cast<double>(reports.size());
  s.median_final_regret = quantile(regret, 0.5);
  s.median_normalized_final_regret = quantile(normalized, 0.5);
  s.q25_normalized_final_regret = quantile(normalized, 0.25);
  s.q75_normalized_final_regret = quantile(normalized, 0.75);
  s.median_final_distance = quantile(distance, 0.5);
  s.median_unique_actions = quantile(unique, 0.5);
  return s;
}

BatchResult batch_runs(const LearnerConfig& config, const UtilitySpec& spec, std::size_t iterations,
                       std::size_t repeats, std::uint64_t base_seed, JudgeNoise judge_noise,
                       double success_threshold, unsigned threads) {
  if (repeats == 0) throw Error(ErrorCode::kInvalidConfig, "repeats must be at least 1");
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, repeats));

  BatchResult result;
  result.reports.resize(repeats);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < repeats && !failed; i = next++) {
      try {
        LearnerConfig run_config = config;
        run_config.seed = base_seed + i;
        const SyntheticUtility u = make_utility(spec, config.space, run_config.seed);
        result.reports[i] = run_experiment(run_config, u, iterations, judge_noise);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(result.reports, success_threshold);
  return result;
}

void write_regret_csv(std::ostream& out, std::span<const ExperimentReport> reports, const ActionSpace& space) {
  out << "seed,iteration,regret";
  for (const auto& d : space.dims()) out << ',' << d.name;
  out << '\n';
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.regret_curve.size(); ++i) {
      out << fmt::format("{},{},{}", r.seed, i + 1, r.regret_curve[i]);
      for (double x : r.incumbent_curve[i].coords) out << fmt::format(",{}", x);
      out << '\n';
    }
  }
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kMalformedDocument,
                "bad field '" + std::string(text) + "' on CSV line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

std::vector<RegretRow> read_regret_csv(std::istream& in, std::vector<std::string>* dimension_names) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kMalformedDocument, "empty regret CSV");
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "seed" || header[1] != "iteration" || header[2] != "regret") {
    throw Error(ErrorCode::kMalformedDocument, "unexpected regret CSV header");
  }
  if (dimension_names) {
    dimension_names->clear();
    for (std::size_t i = 3; i < header.size(); ++i) dimension_names->emplace_back(header[i]);
  }
  std::vector<RegretRow> rows;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedDocument, "wrong field count on CSV line " + std::to_string(line_no));
    }
    RegretRow row;
    row.seed = parse_field<std::uint64_t>(fields[0], line_no);
    row.iteration = parse_field<std::size_t>(fields[1], line_no);
    row.regret = parse_field<double>(fields[2], line_no);
    for (std::size_t i = 3; i < fields.size(); ++i) row.incumbent.push_back(parse_field<double>(fields[i], line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_json(const BatchSummary& s) {
  nlohmann::json j = {
      {"repeats", s.repeats},
      {"iterations", s.iterations},
      {"success_threshold", s.success_threshold},
      {"success_fraction", s.success_fraction},
      {"median_final_regret", s.median_final_regret},
      {"median_normalized_final_regret", s.median_normalized_final_regret},
      {"q25_normalized_final_regret", s.q25_normalized_final_regret},
      {"q75_normalized_final_regret", s.q75_normalized_final_regret},
      {"median_final_distance", s.median_final_distance},
      {"median_unique_actions", s.median_unique_actions},
  };
  return j.dump(2);
}

}  // namespace prefopt
