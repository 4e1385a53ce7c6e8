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

#ifndef PREFOPT_CONFIG_HPP
#define PREFOPT_CONFIG_HPP

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "prefopt/action_space.hpp"
#include "prefopt/learner.hpp"
#include "prefopt/preference_model.hpp"
#include "prefopt/simulation.hpp"

namespace prefopt {

/// Learner configuration document:
///
///   {"dimensions": [{"name", "lower", "upper", "step", "unit"?}, ...],
///    "n_per_iteration": 2, "c_p": ..., "lengthscales": [...],
///    "signal_variance": ..., "jitter": ..., "seed": ...}
///
/// Everything except "dimensions" is optional; omitted kernel and noise
/// values take the per-space defaults. Throws kInvalidConfig (or the
/// validation error of the offending part).
LearnerConfig config_from_json(const nlohmann::json& doc);
/// Fully explicit document; config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const LearnerConfig& config);

/// Reads and validates a config file. Throws kInvalidConfig naming the path.
LearnerConfig load_config_file(const std::filesystem::path& path);

/// Default configuration over the essential-constraint space.
LearnerConfig default_config(std::uint64_t seed = 0);

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

/// {"coords": [...], "values": {name: value, ...}}
nlohmann::json named_action_json(const ActionSpace& space, const Action& a);

nlohmann::json outcome_to_json(const ExecutionOutcome& o);
ExecutionOutcome outcome_from_json(const nlohmann::json& j);

}  // namespace prefopt

#endif  // PREFOPT_CONFIG_HPP
