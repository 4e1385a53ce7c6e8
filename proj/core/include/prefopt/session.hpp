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

#ifndef PREFOPT_SESSION_HPP
#define PREFOPT_SESSION_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefopt/learner.hpp"
#include "prefopt/simulation.hpp"

namespace prefopt {

enum class Phase { kIdle, kAwaitingExecution, kAwaitingPreference };
enum class EventKind { kCreated, kProposed, kExecuted, kPreferred, kSkipped };

std::string_view to_string(Phase phase);
std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct SessionEvent {
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::kCreated;
  nlohmann::json payload;
  std::int64_t at_ms = 0;

  bool operator==(const SessionEvent&) const = default;
};

nlohmann::json event_to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

/// The judgement submitted for a pending proposal. For n = 2 a verdict is
/// enough; larger proposals list pairwise preferences by proposal position.
struct PreferenceSubmission {
  std::optional<Verdict> verdict;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (preferred, rejected)
};

/// One human-in-the-loop experiment: a learner driven by an append-only event
/// log. The session never mutates itself; commands produce the next event
/// and `apply` folds an event in, so replaying a log rebuilds the state.
class Session {
 public:
  /// Builds the `created` event. Validates the config.
  static SessionEvent creation_event(const std::string& id, const std::string& label,
                                     const LearnerConfig& config, std::int64_t at_ms);
  /// Folds a complete log. Throws kMalformedDocument on inconsistent logs.
  static Session replay(const std::vector<SessionEvent>& events);

  const std::string& id() const { return id_; }
  const std::string& label() const { return label_; }
  const LearnerConfig& config() const { return learner_->config(); }
  const Learner& learner() const { return *learner_; }
  Phase phase() const { return phase_; }
  std::int64_t created_ms() const { return created_ms_; }
  std::int64_t updated_ms() const { return updated_ms_; }
  const std::vector<SessionEvent>& events() const { return events_; }
  /// Execution metadata for the pending proposal, once confirmed.
  const std::vector<ExecutionOutcome>& pending_outcomes() const { return outcomes_; }

  /// Command side. Each returns the event that would record the command;
  /// nothing changes until the event is applied. Throws kWrongPhase and
  /// validation errors.
  SessionEvent propose_event(std::int64_t at_ms) const;
  SessionEvent execution_event(std::vector<ExecutionOutcome> outcomes, std::int64_t at_ms) const;
  SessionEvent preference_event(const PreferenceSubmission& submission, std::int64_t at_ms) const;

  /// Throws kMalformedDocument for out-of-sequence or inconsistent events.
  void apply(const SessionEvent& event);

  /// Read model served by get_posterior.
  nlohmann::json posterior_view() const;
  nlohmann::json pending_view() const;
  nlohmann::json summary_view() const;

 private:
  Session() = default;
  std::uint64_t next_sequence() const { return events_.size() + 1; }

  std::string id_;
  std::string label_;
  std::unique_ptr<Learner> learner_;
  Phase phase_ = Phase::kIdle;
  std::int64_t created_ms_ = 0;
  std::int64_t updated_ms_ = 0;
  std::vector<SessionEvent> events_;
  std::vector<ExecutionOutcome> outcomes_;
};

/// Sessions persisted under a data directory:
///
///   <dir>/index.json             {"sessions": [{"id", "label"}, ...]}
///   <dir>/sessions/<id>.jsonl    one event per line, append-only
///
/// Every command appends (and syncs) its event before the in-memory session
/// changes, so a crash between operations loses nothing. Commands on one
/// session are serialized; reads use the last committed snapshot and never
/// wait on a running command.
class SessionStore {
 public:
  using Clock = std::function<std::int64_t()>;

  /// Loads every session found in `data_dir` (created if absent).
  /// Throws kStorageFailure or kMalformedDocument.
  explicit SessionStore(std::filesystem::path data_dir, Clock clock = {}, std::uint64_t id_seed = 0);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  const std::filesystem::path& data_dir() const { return data_dir_; }

  nlohmann::json create_session(const LearnerConfig& config, const std::string& label);
  nlohmann::json list_sessions() const;
  nlohmann::json next_pair(const std::string& id);
  nlohmann::json confirm_execution(const std::string& id, std::vector<ExecutionOutcome> outcomes);
  nlohmann::json submit_preference(const std::string& id, const PreferenceSubmission& submission);
  nlohmann::json get_posterior(const std::string& id) const;
  nlohmann::json export_session(const std::string& id) const;
  /// Replays an exported document into this store under its original id.
  /// Throws kMalformedDocument (including a posterior that does not match the
  /// replay) or kInvalidConfig when the id is taken.
  std::string import_session(const nlohmann::json& doc);

  /// Copy of the live learner state, for inspection and tests.
  LearnerState learner_state(const std::string& id) const;
  std::vector<SessionEvent> events(const std::string& id) const;

 private:
  struct Entry;

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append_event(const std::string& id, const SessionEvent& event);
  void write_index() const;
  std::string fresh_id();
  template <typename MakeEvent>
  nlohmann::json run_command(const std::string& id, MakeEvent make_event);

  std::filesystem::path data_dir_;
  Clock clock_;
  Random id_rng_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  mutable std::mutex index_mutex_;
};

/// The document export_session produces for a session.
nlohmann::json export_document(const Session& session);
/// Text form used on disk and over the wire, stable byte-for-byte.
std::string dump_document(const nlohmann::json& doc);

}  // namespace prefopt

#endif  // PREFOPT_SESSION_HPP
