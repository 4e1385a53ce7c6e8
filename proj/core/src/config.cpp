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

#include "prefopt/config.hpp"

#include <cmath>
#include <fstream>

#include "prefopt/error.hpp"

namespace prefopt {

namespace {

template <typename T>
T required(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorCode::kInvalidConfig, std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kInvalidConfig, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  return required<T>(doc, key);
}

}  // namespace

LearnerConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  const auto dims_doc = required<nlohmann::json>(doc, "dimensions");
  if (!dims_doc.is_array()) throw Error(ErrorCode::kInvalidConfig, "'dimensions' must be an array");

  std::vector<DimensionSpec> dims;
  for (const auto& d : dims_doc) {
    if (!d.is_object()) throw Error(ErrorCode::kInvalidConfig, "each dimension must be an object");
    dims.push_back({required<std::string>(d, "name"), required<double>(d, "lower"), required<double>(d, "upper"),
                    required<double>(d, "step"), optional_field<std::string>(d, "unit", "")});
  }

  LearnerConfig config = LearnerConfig::defaults_for(ActionSpace(std::move(dims)),
                                                     optional_field<std::uint64_t>(doc, "seed", 0));
  config.n_per_iteration = optional_field<std::size_t>(doc, "n_per_iteration", 2);
  config.hp.lengthscales = optional_field(doc, "lengthscales", config.hp.lengthscales);
  config.hp.signal_variance = optional_field(doc, "signal_variance", config.hp.signal_variance);
  config.hp.jitter = optional_field(doc, "jitter", config.hp.jitter);
  // c_p defaults track the (possibly overridden) signal variance.
  config.c_p = NoiseParam(optional_field(doc, "c_p", std::sqrt(2.0 * config.hp.signal_variance)));
  config.validate();
  return config;
}

nlohmann::json config_to_json(const LearnerConfig& config) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : config.space.dims()) {
    nlohmann::json entry = {{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}, {"step", d.step}};
    if (!d.unit.empty()) entry["unit"] = d.unit;
    dims.push_back(std::move(entry));
  }
  return {
      {"dimensions", std::move(dims)},
      {"n_per_iteration", config.n_per_iteration},
      {"c_p", config.c_p.value()},
      {"lengthscales", config.hp.lengthscales},
      {"signal_variance", config.hp.signal_variance},
      {"jitter", config.hp.jitter},
      {"seed", config.seed},
  };
}

LearnerConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), "in '" + path.string() + "': " + e.what());
  }
}

LearnerConfig default_config(std::uint64_t seed) {
  return LearnerConfig::defaults_for(ActionSpace(essential_constraint_dimensions()), seed);
}

nlohmann::json action_to_json(const Action& a) { return a.coords; }

Action action_from_json(const nlohmann::json& j) {
  try {
    return Action{j.get<std::vector<double>>()};
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kMalformedDocument, "action must be an array of numbers");
  }
}

nlohmann::json named_action_json(const ActionSpace& space, const Action& a) {
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t j = 0; j < space.dimension() && j < a.size(); ++j) values[space.dim(j).name] = a[j];
  return {{"coords", a.coords}, {"values", std::move(values)}};
}

nlohmann::json outcome_to_json(const ExecutionOutcome& o) {
  return {{"success", o.success}, {"tags", o.tags}, {"video_url", o.video_url}};
}

ExecutionOutcome outcome_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedDocument, "execution outcome must be an object");
  ExecutionOutcome o;
  try {
    o.success = j.value("success", true);
    o.tags = j.value("tags", std::vector<std::string>{});
    o.video_url = j.value("video_url", std::string{});
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kMalformedDocument, "execution outcome has fields of the wrong type");
  }
  return o;
}

}  // namespace prefopt
