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

#include "prefopt/session.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "prefopt/config.hpp"
#include "prefopt/error.hpp"

namespace prefopt {

namespace fs = std::filesystem;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kIdle: return "idle";
    case Phase::kAwaitingExecution: return "awaiting_execution";
    case Phase::kAwaitingPreference: return "awaiting_preference";
  }
  return "idle";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kCreated: return "created";
    case EventKind::kProposed: return "proposed";
    case EventKind::kExecuted: return "executed";
    case EventKind::kPreferred: return "preferred";
    case EventKind::kSkipped: return "skipped";
  }
  return "created";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto kind : {EventKind::kCreated, EventKind::kProposed, EventKind::kExecuted, EventKind::kPreferred,
                    EventKind::kSkipped}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

nlohmann::json event_to_json(const SessionEvent& e) {
  return {{"sequence", e.sequence}, {"kind", to_string(e.kind)}, {"at", e.at_ms}, {"payload", e.payload}};
}

SessionEvent event_from_json(const nlohmann::json& j) {
  SessionEvent e;
  try {
    e.sequence = j.at("sequence").get<std::uint64_t>();
    const auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kMalformedDocument, "unknown event kind " + j.at("kind").dump());
    e.kind = *kind;
    e.at_ms = j.at("at").get<std::int64_t>();
    e.payload = j.at("payload");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad event: ") + ex.what());
  }
  return e;
}

// ---------------------------------------------------------------------------
// Session

SessionEvent Session::creation_event(const std::string& id, const std::string& label, const LearnerConfig& config,
                                     std::int64_t at_ms) {
  config.validate();
  return {1, EventKind::kCreated, {{"id", id}, {"label", label}, {"config", config_to_json(config)}}, at_ms};
}

Session Session::replay(const std::vector<SessionEvent>& events) {
  if (events.empty() || events.front().kind != EventKind::kCreated) {
    throw Error(ErrorCode::kMalformedDocument, "event log must start with a 'created' event");
  }
  Session s;
  for (const auto& e : events) s.apply(e);
  return s;
}

SessionEvent Session::propose_event(std::int64_t at_ms) const {
  if (phase_ != Phase::kIdle) {
    throw Error(ErrorCode::kWrongPhase, "session is " + std::string(to_string(phase_)) + ", not idle");
  }
  Learner scratch = *learner_;
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : scratch.propose()) actions.push_back(action_to_json(a));
  return {next_sequence(), EventKind::kProposed, {{"actions", std::move(actions)}}, at_ms};
}

SessionEvent Session::execution_event(std::vector<ExecutionOutcome> outcomes, std::int64_t at_ms) const {
  if (phase_ != Phase::kAwaitingExecution) {
    throw Error(ErrorCode::kWrongPhase, "session is " + std::string(to_string(phase_)) + ", not awaiting execution");
  }
  const std::size_t n = learner_->state().pending->actions.size();
  if (outcomes.empty()) outcomes.resize(n);
  if (outcomes.size() != n) {
    throw Error(ErrorCode::kProposalMismatch, fmt::format("expected {} execution outcomes, got {}", n, outcomes.size()));
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& o : outcomes) list.push_back(outcome_to_json(o));
  return {next_sequence(), EventKind::kExecuted, {{"outcomes", std::move(list)}}, at_ms};
}

SessionEvent Session::preference_event(const PreferenceSubmission& submission, std::int64_t at_ms) const {
  if (phase_ != Phase::kAwaitingPreference) {
    throw Error(ErrorCode::kWrongPhase, "session is " + std::string(to_string(phase_)) + ", not awaiting a preference");
  }
  const auto& pending = learner_->state().pending->actions;
  std::vector<std::pair<std::size_t, std::size_t>> pairs = submission.pairs;
  nlohmann::json payload = nlohmann::json::object();
  if (submission.verdict) {
    if (!pairs.empty()) throw Error(ErrorCode::kInvalidConfig, "give either a verdict or explicit pairs, not both");
    payload["verdict"] = to_string(*submission.verdict);
    if (*submission.verdict != Verdict::kNoPreference) {
      if (pending.size() != 2) {
        throw Error(ErrorCode::kInvalidConfig, "a first/second verdict needs exactly two proposed actions");
      }
      pairs.push_back(*submission.verdict == Verdict::kPreferFirst ? std::pair<std::size_t, std::size_t>{0, 1}
                                                                   : std::pair<std::size_t, std::size_t>{1, 0});
    }
  }

  nlohmann::json records = nlohmann::json::array();
  nlohmann::json pair_list = nlohmann::json::array();
  for (auto [preferred, rejected] : pairs) {
    if (preferred >= pending.size() || rejected >= pending.size()) {
      throw Error(ErrorCode::kUnknownAction, "preference refers to a position outside the proposal");
    }
    if (pending[preferred] == pending[rejected]) {
      throw Error(ErrorCode::kPreferenceBetweenIdenticalActions, "both positions hold the same action");
    }
    pair_list.push_back({preferred, rejected});
    records.push_back({{"preferred", action_to_json(pending[preferred])},
                       {"rejected", action_to_json(pending[rejected])}});
  }
  payload["pairs"] = std::move(pair_list);
  payload["records"] = std::move(records);
  const EventKind kind = payload["records"].empty() ? EventKind::kSkipped : EventKind::kPreferred;
  return {next_sequence(), kind, std::move(payload), at_ms};
}

void Session::apply(const SessionEvent& event) {
  if (event.sequence != next_sequence()) {
    throw Error(ErrorCode::kMalformedDocument,
                fmt::format("event sequence {} where {} was expected", event.sequence, next_sequence()));
  }
  if ((event.kind == EventKind::kCreated) != events_.empty()) {
    throw Error(ErrorCode::kMalformedDocument, "'created' must be exactly the first event");
  }
  auto expect_phase = [&](Phase wanted) {
    if (phase_ != wanted) {
      throw Error(ErrorCode::kMalformedDocument, fmt::format("'{}' event while {}", to_string(event.kind),
                                                             to_string(phase_)));
    }
  };

  try {
    switch (event.kind) {
      case EventKind::kCreated: {
        auto learner = std::make_unique<Learner>(config_from_json(event.payload.at("config")));
        id_ = event.payload.at("id").get<std::string>();
        label_ = event.payload.at("label").get<std::string>();
        learner_ = std::move(learner);
        created_ms_ = event.at_ms;
        break;
      }
      case EventKind::kProposed: {
        expect_phase(Phase::kIdle);
        Learner next = *learner_;
        const auto proposals = next.propose();
        std::vector<Action> recorded;
        for (const auto& a : event.payload.at("actions")) recorded.push_back(action_from_json(a));
        if (recorded != proposals) {
          throw Error(ErrorCode::kMalformedDocument, "recorded proposal differs from the replayed learner");
        }
        *learner_ = std::move(next);
        outcomes_.clear();
        phase_ = Phase::kAwaitingExecution;
        break;
      }
      case EventKind::kExecuted: {
        expect_phase(Phase::kAwaitingExecution);
        std::vector<ExecutionOutcome> outcomes;
        for (const auto& o : event.payload.at("outcomes")) outcomes.push_back(outcome_from_json(o));
        Learner next = *learner_;
        next.record_execution(next.state().pending->actions);
        *learner_ = std::move(next);
        outcomes_ = std::move(outcomes);
        phase_ = Phase::kAwaitingPreference;
        break;
      }
      case EventKind::kPreferred:
      case EventKind::kSkipped: {
        expect_phase(Phase::kAwaitingPreference);
        std::vector<PreferenceRecord> records;
        if (event.kind == EventKind::kPreferred) {
          for (const auto& r : event.payload.at("records")) {
            records.push_back({action_from_json(r.at("preferred")), action_from_json(r.at("rejected")), 0,
                               event.at_ms});
          }
        }
        Learner next = *learner_;
        next.record_preferences(std::move(records));
        *learner_ = std::move(next);
        outcomes_.clear();
        phase_ = Phase::kIdle;
        break;
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, fmt::format("bad '{}' payload: {}", to_string(event.kind), ex.what()));
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::kMalformedDocument) throw;
    throw Error(ErrorCode::kMalformedDocument, fmt::format("'{}' event rejected: {}", to_string(event.kind), ex.what()));
  }
  events_.push_back(event);
  updated_ms_ = event.at_ms;
}

nlohmann::json Session::pending_view() const {
  const auto& pending = learner_->state().pending;
  if (!pending) return nullptr;
  nlohmann::json actions = nlohmann::json::array();
  for (std::size_t i = 0; i < pending->actions.size(); ++i) {
    auto entry = named_action_json(config().space, pending->actions[i]);
    entry["label"] = std::string(1, static_cast<char>('A' + i % 26));
    actions.push_back(std::move(entry));
  }
  nlohmann::json outcomes = nullptr;
  if (pending->executed) {
    outcomes = nlohmann::json::array();
    for (const auto& o : outcomes_) outcomes.push_back(outcome_to_json(o));
  }
  return {{"iteration", learner_->state().iteration + 1},
          {"phase", to_string(phase_)},
          {"actions", std::move(actions)},
          {"outcomes", std::move(outcomes)}};
}

nlohmann::json Session::posterior_view() const {
  const auto& state = learner_->state();
  nlohmann::json actions = nlohmann::json::array();
  nlohmann::json incumbent = nullptr;
  bool converged = true;
  if (state.incumbent_posterior) {
    const auto& post = *state.incumbent_posterior;
    converged = post.map_converged;
    for (std::size_t i = 0; i < post.actions.size(); ++i) {
      auto entry = named_action_json(config().space, post.actions[i]);
      const auto ii = static_cast<Eigen::Index>(i);
      entry["mean"] = post.mean[ii];
      entry["variance"] = post.covariance(ii, ii);
      entry["incumbent"] = state.incumbent && post.actions[i] == *state.incumbent;
      if (entry["incumbent"].get<bool>()) {
        incumbent = entry;
        incumbent.erase("incumbent");
        incumbent["index"] = i;
      }
      actions.push_back(std::move(entry));
    }
  }
  return {{"id", id_},
          {"iteration", state.iteration},
          {"phase", to_string(phase_)},
          {"dataset_size", state.dataset.size()},
          {"executed_count", state.executed.size()},
          {"map_converged", converged},
          {"incumbent", std::move(incumbent)},
          {"actions", std::move(actions)},
          {"pending", pending_view()}};
}

nlohmann::json Session::summary_view() const {
  nlohmann::json dims = config_to_json(config())["dimensions"];
  return {{"id", id_},
          {"label", label_},
          {"phase", to_string(phase_)},
          {"iteration", learner_->state().iteration},
          {"executed_count", learner_->state().executed.size()},
          {"dataset_size", learner_->state().dataset.size()},
          {"n_per_iteration", config().n_per_iteration},
          {"dimensions", std::move(dims)},
          {"created_at", created_ms_},
          {"updated_at", updated_ms_},
          {"pending", pending_view()}};
}

nlohmann::json export_document(const Session& session) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : session.events()) events.push_back(event_to_json(e));
  return {{"format", "prefopt-session/1"},
          {"session", {{"id", session.id()}, {"label", session.label()}}},
          {"events", std::move(events)},
          {"posterior", session.posterior_view()}};
}

std::string dump_document(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// SessionStore

struct SessionStore::Entry {
  explicit Entry(Session s) : session(std::move(s)) { refresh(); }

  void refresh() {
    auto posterior = std::make_shared<const nlohmann::json>(session.posterior_view());
    auto summary = std::make_shared<const nlohmann::json>(session.summary_view());
    std::lock_guard lock(snapshot_mutex);
    posterior_snapshot = std::move(posterior);
    summary_snapshot = std::move(summary);
  }

  std::shared_ptr<const nlohmann::json> posterior() const {
    std::lock_guard lock(snapshot_mutex);
    return posterior_snapshot;
  }
  std::shared_ptr<const nlohmann::json> summary() const {
    std::lock_guard lock(snapshot_mutex);
    return summary_snapshot;
  }

  std::mutex command_mutex;
  Session session;
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const nlohmann::json> posterior_snapshot;
  std::shared_ptr<const nlohmann::json> summary_snapshot;
};

namespace {

void write_all(int fd, const std::string& text, const fs::path& path) {
  const char* data = text.data();
  std::size_t left = text.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, data, left);
    if (n < 0) throw Error(ErrorCode::kStorageFailure, "write failed for '" + path.string() + "'");
    data += n;
    left -= static_cast<std::size_t>(n);
  }
}

// Appends (or with `truncate`, replaces) and syncs before returning.
void durable_write(const fs::path& path, const std::string& text, bool truncate) {
  const int flags = O_WRONLY | O_CREAT | (truncate ? O_TRUNC : O_APPEND);
  const int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) throw Error(ErrorCode::kStorageFailure, "cannot open '" + path.string() + "' for writing");
  try {
    write_all(fd, text, path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorCode::kStorageFailure, "fsync failed for '" + path.string() + "'");
}

// Complete lines only; `valid_bytes` receives the length of that prefix.
std::vector<SessionEvent> read_log(const fs::path& path, std::size_t& valid_bytes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kStorageFailure, "cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<SessionEvent> events;
  std::size_t start = 0;
  valid_bytes = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) break;  // torn trailing write: the command never completed
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    valid_bytes = start;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& ex) {
      throw Error(ErrorCode::kMalformedDocument, "corrupt event in '" + path.string() + "': " + ex.what());
    }
  }
  return events;
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

SessionStore::SessionStore(fs::path data_dir, Clock clock, std::uint64_t id_seed)
    : data_dir_(std::move(data_dir)),
      clock_(clock ? std::move(clock) : Clock(system_clock_ms)),
      id_rng_(id_seed != 0 ? id_seed : (std::uint64_t{std::random_device{}()} << 32 | std::random_device{}())) {
  std::error_code ec;
  fs::create_directories(data_dir_ / "sessions", ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot create '" + data_dir_.string() + "': " + ec.message());

  for (const auto& file : fs::directory_iterator(data_dir_ / "sessions")) {
    if (file.path().extension() != ".jsonl") continue;
    std::size_t valid_bytes = 0;
    const auto events = read_log(file.path(), valid_bytes);
    if (valid_bytes < fs::file_size(file.path())) {
      // Drop the torn tail so later appends start on a fresh line.
      std::error_code trunc_ec;
      fs::resize_file(file.path(), valid_bytes, trunc_ec);
      if (trunc_ec) throw Error(ErrorCode::kStorageFailure, "cannot repair '" + file.path().string() + "'");
    }
    if (events.empty()) continue;
    Session session = Session::replay(events);
    if (session.id() != file.path().stem().string()) {
      throw Error(ErrorCode::kMalformedDocument, "log '" + file.path().string() + "' belongs to another session");
    }
    const std::string id = session.id();
    sessions_.emplace(id, std::make_shared<Entry>(std::move(session)));
  }
  write_index();
}

SessionStore::~SessionStore() = default;

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
  return it->second;
}

void SessionStore::append_event(const std::string& id, const SessionEvent& event) {
  durable_write(data_dir_ / "sessions" / (id + ".jsonl"), event_to_json(event).dump() + "\n", false);
}

void SessionStore::write_index() const {
  std::lock_guard index_lock(index_mutex_);
  nlohmann::json list = nlohmann::json::array();
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, entry] : sessions_) {
      list.push_back({{"id", id}, {"label", entry->summary()->at("label")}});
    }
  }
  const fs::path tmp = data_dir_ / "index.json.tmp";
  durable_write(tmp, nlohmann::json{{"sessions", std::move(list)}}.dump(2) + "\n", true);
  std::error_code ec;
  fs::rename(tmp, data_dir_ / "index.json", ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot update session index: " + ec.message());
}

std::string SessionStore::fresh_id() {
  std::shared_lock lock(sessions_mutex_);
  for (;;) {
    std::string id = fmt::format("{:016x}", id_rng_.next_u64());
    if (!sessions_.contains(id)) return id;
  }
}

nlohmann::json SessionStore::create_session(const LearnerConfig& config, const std::string& label) {
  const std::string id = fresh_id();
  const SessionEvent created = Session::creation_event(id, label, config, clock_());
  Session session = Session::replay({created});
  append_event(id, created);
  auto entry = std::make_shared<Entry>(std::move(session));
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, entry);
  }
  write_index();
  return *entry->summary();
}

nlohmann::json SessionStore::list_sessions() const {
  nlohmann::json list = nlohmann::json::array();
  std::shared_lock lock(sessions_mutex_);
  for (const auto& [id, entry] : sessions_) list.push_back(*entry->summary());
  return list;
}

template <typename MakeEvent>
nlohmann::json SessionStore::run_command(const std::string& id, MakeEvent make_event) {
  auto entry = find(id);
  std::lock_guard lock(entry->command_mutex);
  const SessionEvent event = make_event(entry->session, clock_());
  append_event(id, event);  // write-ahead
  entry->session.apply(event);
  entry->refresh();
  return event_to_json(event);
}

nlohmann::json SessionStore::next_pair(const std::string& id) {
  run_command(id, [](const Session& s, std::int64_t now) { return s.propose_event(now); });
  auto entry = find(id);
  nlohmann::json pair = entry->posterior()->at("pending");
  pair["id"] = id;
  pair["dimensions"] = entry->summary()->at("dimensions");
  return pair;
}

nlohmann::json SessionStore::confirm_execution(const std::string& id, std::vector<ExecutionOutcome> outcomes) {
  run_command(id, [&](const Session& s, std::int64_t now) { return s.execution_event(std::move(outcomes), now); });
  auto entry = find(id);
  return {{"acknowledged", true}, {"phase", entry->summary()->at("phase")}, {"pending", entry->posterior()->at("pending")}};
}

nlohmann::json SessionStore::submit_preference(const std::string& id, const PreferenceSubmission& submission) {
  const auto event =
      run_command(id, [&](const Session& s, std::int64_t now) { return s.preference_event(submission, now); });
  const auto posterior = find(id)->posterior();
  return {{"id", id},
          {"recorded", event.at("kind")},
          {"iteration", posterior->at("iteration")},
          {"dataset_size", posterior->at("dataset_size")},
          {"phase", posterior->at("phase")},
          {"incumbent", posterior->at("incumbent")}};
}

nlohmann::json SessionStore::get_posterior(const std::string& id) const { return *find(id)->posterior(); }

nlohmann::json SessionStore::export_session(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->command_mutex);
  return export_document(entry->session);
}

std::string SessionStore::import_session(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "prefopt-session/1" || !doc.contains("events") ||
      !doc.at("events").is_array()) {
    throw Error(ErrorCode::kMalformedDocument, "not a prefopt session export");
  }
  std::vector<SessionEvent> events;
  for (const auto& e : doc.at("events")) events.push_back(event_from_json(e));
  Session session = Session::replay(events);
  if (doc.contains("posterior") && doc.at("posterior") != session.posterior_view()) {
    throw Error(ErrorCode::kMalformedDocument, "exported posterior does not match the replayed session");
  }
  const std::string id = session.id();
  {
    std::shared_lock lock(sessions_mutex_);
    if (sessions_.contains(id)) throw Error(ErrorCode::kInvalidConfig, "session '" + id + "' already exists");
  }
  std::string log;
  for (const auto& e : events) log += event_to_json(e).dump() + "\n";
  const fs::path tmp = data_dir_ / "sessions" / (id + ".jsonl.tmp");
  durable_write(tmp, log, true);
  std::error_code ec;
  fs::rename(tmp, data_dir_ / "sessions" / (id + ".jsonl"), ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot install imported log: " + ec.message());
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, std::make_shared<Entry>(std::move(session)));
  }
  write_index();
  return id;
}

LearnerState SessionStore::learner_state(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->command_mutex);
  return entry->session.learner().state();
}

std::vector<SessionEvent> SessionStore::events(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->command_mutex);
  return entry->session.events();
}

}  // namespace prefopt
