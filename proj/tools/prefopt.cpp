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

// prefopt: simulated experiments, the session server, and session tooling.
//
// Exit status: 0 on success, 1 on runtime failure, 2 on usage or
// configuration errors.

#include <pthread.h>
#include <signal.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "prefopt/config.hpp"
#include "prefopt/error.hpp"
#include "prefopt/http_service.hpp"
#include "prefopt/session.hpp"
#include "prefopt/simulation.hpp"

namespace {

using namespace prefopt;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LearnerConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  LearnerConfig config;
  try {
    config = path.empty() ? default_config() : load_config_file(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (seed) config.seed = *seed;
  return config;
}

UtilitySpec utility_spec(const std::string& kind) {
  try {
    return UtilitySpec{parse_utility_kind(kind), std::nullopt, {}};
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error(ErrorCode::kStorageFailure, "cannot write '" + path + "'");
  return file;
}

enum class Level { kError, kWarn, kInfo, kDebug };

Level parse_level(const std::string& text) {
  if (text == "error") return Level::kError;
  if (text == "warn") return Level::kWarn;
  if (text == "debug") return Level::kDebug;
  return Level::kInfo;
}

// Options shared by simulate and batch.
struct RunOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t iterations = 50;
  std::string utility = "negdistance";
  bool noisy = false;
  std::string csv;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("-c,--config", o.config, "Learner config JSON (default: the five-dimensional gait space)");
  cmd->add_option("-i,--iterations", o.iterations, "Iterations per run")->capture_default_str();
  cmd->add_option("-u,--utility", o.utility, "Synthetic utility: negdistance, quadratic, multimodal")
      ->capture_default_str();
  cmd->add_flag("--noisy", o.noisy, "Use the logistic noisy judge instead of the noiseless one");
  cmd->add_option("--csv", o.csv, "Write the regret curve CSV here ('-' for stdout)");
}

int run_simulate(const RunOptions& o) {
  const LearnerConfig config = load_config(o.config, o.seed);
  const auto u = make_utility(utility_spec(o.utility), config.space, o.seed);
  const auto report =
      run_experiment(config, u, o.iterations, o.noisy ? JudgeNoise::kNoisy : JudgeNoise::kNoiseless);
  if (!o.csv.empty()) {
    std::ofstream file;
    write_regret_csv(open_output(o.csv, file), std::span(&report, 1), config.space);
  }
  nlohmann::json out = {
      {"seed", report.seed},
      {"iterations", report.iterations},
      {"optimum", named_action_json(config.space, report.optimum)},
      {"incumbent", named_action_json(config.space, report.final_incumbent)},
      {"final_regret", report.regret_curve.empty() ? 0.0 : report.regret_curve.back()},
      {"final_normalized_regret",
       report.normalized_regret_curve.empty() ? 0.0 : report.normalized_regret_curve.back()},
      {"final_distance", report.final_distance},
      {"unique_actions", report.unique_actions},
      {"wall_time_s", report.wall_time.count()},
  };
  (o.csv == "-" ? std::cerr : std::cout) << out.dump(2) << "\n";
  return 0;
}

int run_batch(const RunOptions& o, std::size_t repeats, double threshold, unsigned threads) {
  const LearnerConfig config = load_config(o.config, std::nullopt);
  const auto result = batch_runs(config, utility_spec(o.utility), o.iterations, repeats, o.seed,
                                 o.noisy ? JudgeNoise::kNoisy : JudgeNoise::kNoiseless, threshold, threads);
  if (!o.csv.empty()) {
    std::ofstream file;
    write_regret_csv(open_output(o.csv, file), result.reports, config.space);
  }
  (o.csv == "-" ? std::cerr : std::cout) << summary_json(result.summary) << "\n";
  return 0;
}

int run_serve(const std::string& data_dir, const std::string& host, int port, const std::string& static_dir,
              Level level) {
  // Block termination signals in every thread; a dedicated thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionStore store(data_dir);
  HttpOptions options;
  options.static_dir = static_dir;
  if (level >= Level::kInfo) {
    options.access_log = [level](const std::string& method, const std::string& path, int status) {
      if (status >= 400 || level >= Level::kDebug || method != "GET") {
        std::cerr << fmt::format("{} {} -> {}\n", method, path, status);
      }
    };
  }
  HttpService service(store, options);
  if (port == 0) {
    port = service.bind_to_any_port(host);
    if (port < 0) throw Error(ErrorCode::kStorageFailure, "cannot bind " + host);
  } else if (!service.bind(host, port)) {
    throw Error(ErrorCode::kStorageFailure, fmt::format("cannot bind {}:{}", host, port));
  }
  if (level >= Level::kInfo) {
    std::cerr << fmt::format("serving {} sessions from '{}' on http://{}:{}\n", store.list_sessions().size(),
                             data_dir, host, port);
  }

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  const bool ok = service.listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return ok ? 0 : kExitRuntime;
}

nlohmann::json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

int run_inspect(const std::string& data_dir, const std::string& session, const std::string& file) {
  if (!file.empty()) {
    const auto doc = read_document(file);
    std::vector<SessionEvent> events;
    if (!doc.contains("events")) throw UsageError("'" + file + "' is not a session export");
    for (const auto& e : doc.at("events")) events.push_back(event_from_json(e));
    const Session replayed = Session::replay(events);
    auto view = replayed.posterior_view();
    view["replay_matches_export"] = doc.contains("posterior") && doc.at("posterior") == view;
    std::cout << view.dump(2) << "\n";
    return view["replay_matches_export"].get<bool>() ? 0 : kExitRuntime;
  }
  const SessionStore store(data_dir);
  if (session.empty()) {
    for (const auto& s : store.list_sessions()) {
      std::cout << fmt::format("{}  {:<20}  {:<20}  iteration {}  executed {}\n", s.at("id").get<std::string>(),
                               s.at("label").get<std::string>(), s.at("phase").get<std::string>(),
                               s.at("iteration").get<std::size_t>(), s.at("executed_count").get<std::size_t>());
    }
    return 0;
  }
  std::cout << store.get_posterior(session).dump(2) << "\n";
  return 0;
}

int run_export(const std::string& data_dir, const std::string& session, const std::string& output) {
  const SessionStore store(data_dir);
  std::ofstream file;
  open_output(output, file) << dump_document(store.export_session(session));
  return 0;
}

int run_validate(const std::string& path) {
  const LearnerConfig config = load_config(path, std::nullopt);
  nlohmann::json out = config_to_json(config);
  out["grid_size"] = config.space.grid_size();
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based gait parameter optimization: simulation, session server and tooling."};
  app.require_subcommand(1);

  RunOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run one experiment against a synthetic judge");
  add_run_options(simulate, sim);
  simulate->add_option("-s,--seed", sim.seed, "Seed for learner, judge and utility")->capture_default_str();

  RunOptions bat;
  std::size_t repeats = 30;
  double threshold = 0.15;
  unsigned threads = 0;
  auto* batch = app.add_subcommand("batch", "Run seeded repeats and summarize convergence");
  add_run_options(batch, bat);
  bat.seed = 1;
  batch->add_option("-s,--base-seed", bat.seed, "Seed of the first run; runs use consecutive seeds")
      ->capture_default_str();
  batch->add_option("-r,--repeats", repeats, "Number of runs")->capture_default_str()->check(CLI::PositiveNumber);
  batch->add_option("--threshold", threshold, "Normalized distance counted as success")->capture_default_str();
  batch->add_option("-j,--threads", threads, "Worker threads (0: all cores)")->capture_default_str();

  std::string data_dir = "prefopt-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string log_level = "info";
  auto* serve = app.add_subcommand("serve", "Serve sessions over HTTP/JSON");
  serve->add_option("-d,--data-dir", data_dir, "Session storage directory")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("-p,--port", port, "Port (0: any free port)")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served under / (browser frontend)");
  serve->add_option("--log-level", log_level, "error, warn, info or debug")
      ->capture_default_str()
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  std::string session;
  std::string file;
  auto* inspect = app.add_subcommand("inspect", "List sessions, show a posterior, or check an export file");
  inspect->add_option("-d,--data-dir", data_dir, "Session storage directory")->capture_default_str();
  inspect->add_option("session", session, "Session id (omit to list sessions)");
  inspect->add_option("-f,--file", file, "Replay an exported document instead of reading the store");

  std::string output;
  auto* export_cmd = app.add_subcommand("export", "Write a session's event log and posterior");
  export_cmd->add_option("-d,--data-dir", data_dir, "Session storage directory")->capture_default_str();
  export_cmd->add_option("session", session, "Session id")->required();
  export_cmd->add_option("-o,--output", output, "Output file (default: stdout)");

  std::string config_path;
  auto* validate = app.add_subcommand("validate-config", "Check a learner config and print it with defaults filled");
  validate->add_option("config", config_path, "Config JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*batch) return run_batch(bat, repeats, threshold, threads);
    if (*serve) return run_serve(data_dir, host, port, static_dir, parse_level(log_level));
    if (*inspect) return run_inspect(data_dir, session, file);
    if (*export_cmd) return run_export(data_dir, session, output);
    if (*validate) return run_validate(config_path);
  } catch (const UsageError& e) {
    std::cerr << "prefopt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "prefopt: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
