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

#include "prefopt/http_service.hpp"

#include <httplib.h>

#include "prefopt/config.hpp"
#include "prefopt/error.hpp"

namespace prefopt {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession: return 404;
    case ErrorCode::kWrongPhase:
    case ErrorCode::kPendingProposalExists:
    case ErrorCode::kNoPendingProposal: return 409;
    case ErrorCode::kStorageFailure:
    case ErrorCode::kSingularPrior:
    case ErrorCode::kNonSymmetricCovariance: return 500;
    default: return 400;
  }
}

struct HttpService::Impl {
  Impl(SessionStore& s, HttpOptions o) : store(s), options(std::move(o)) {}

  SessionStore& store;
  HttpOptions options;
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(dump_document(body), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    auto body = nlohmann::json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::kMalformedDocument, "request body must be a JSON object");
    return body;
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("request body is not JSON: ") + ex.what());
  }
}

PreferenceSubmission parse_submission(const nlohmann::json& body) {
  PreferenceSubmission s;
  try {
    if (body.contains("verdict")) {
      const auto text = body.at("verdict").get<std::string>();
      s.verdict = parse_verdict(text);
      if (!s.verdict) throw Error(ErrorCode::kMalformedDocument, "unknown verdict '" + text + "'");
    }
    if (body.contains("pairs")) {
      for (const auto& p : body.at("pairs")) {
        if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::kMalformedDocument, "pairs are [preferred, rejected]");
        s.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad preference body: ") + ex.what());
  }
  if (!s.verdict && !body.contains("pairs")) {
    throw Error(ErrorCode::kMalformedDocument, "preference body needs a 'verdict' or 'pairs'");
  }
  return s;
}

}  // namespace

HttpService::HttpService(SessionStore& store, HttpOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  auto& server = impl_->server;
  auto& s = impl_->store;
  if (impl_->options.threads > 0) {
    const std::size_t n = impl_->options.threads;
    server.new_task_queue = [n] { return new httplib::ThreadPool(n); };
  }

  // Wraps a handler with error mapping; `id` is the session path parameter, if any.
  auto guarded = [&s](auto body) {
    return [&s, body](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.contains("id") ? req.path_params.at("id") : std::string{};
      try {
        body(req, res, id);
      } catch (const Error& ex) {
        nlohmann::json err = {{"error", to_string(ex.code())}, {"message", ex.what()}};
        if (ex.code() == ErrorCode::kWrongPhase && !id.empty()) {
          try {
            const auto posterior = s.get_posterior(id);
            err["phase"] = posterior.at("phase");
            err["pending"] = posterior.at("pending");
          } catch (const Error&) {
          }
        }
        send_json(res, http_status(ex.code()), err);
      } catch (const std::exception& ex) {
        send_json(res, 500, {{"error", "internal"}, {"message", ex.what()}});
      }
    };
  };

  server.Post("/sessions", guarded([&s](const httplib::Request& req, httplib::Response& res, const std::string&) {
    const auto body = parse_body(req);
    LearnerConfig config = body.contains("config") ? config_from_json(body.at("config"))
                                                   : default_config(body.value("seed", std::uint64_t{0}));
    if (body.contains("config") && body.contains("seed")) config.seed = body.at("seed").get<std::uint64_t>();
    send_json(res, 201, s.create_session(config, body.value("label", std::string{})));
  }));
  server.Get("/sessions", guarded([&s](const httplib::Request&, httplib::Response& res, const std::string&) {
    send_json(res, 200, {{"sessions", s.list_sessions()}});
  }));
  server.Post("/sessions/:id/next-pair",
              guarded([&s](const httplib::Request&, httplib::Response& res, const std::string& id) {
                send_json(res, 200, s.next_pair(id));
              }));
  server.Post("/sessions/:id/execution",
              guarded([&s](const httplib::Request& req, httplib::Response& res, const std::string& id) {
                const auto body = parse_body(req);
                std::vector<ExecutionOutcome> outcomes;
                if (body.contains("outcomes")) {
                  if (!body.at("outcomes").is_array()) {
                    throw Error(ErrorCode::kMalformedDocument, "'outcomes' must be an array");
                  }
                  for (const auto& o : body.at("outcomes")) outcomes.push_back(outcome_from_json(o));
                }
                send_json(res, 200, s.confirm_execution(id, std::move(outcomes)));
              }));
  server.Post("/sessions/:id/preference",
              guarded([&s](const httplib::Request& req, httplib::Response& res, const std::string& id) {
                send_json(res, 200, s.submit_preference(id, parse_submission(parse_body(req))));
              }));
  server.Get("/sessions/:id/posterior",
             guarded([&s](const httplib::Request&, httplib::Response& res, const std::string& id) {
               send_json(res, 200, s.get_posterior(id));
             }));
  server.Get("/sessions/:id/export",
             guarded([&s](const httplib::Request&, httplib::Response& res, const std::string& id) {
               send_json(res, 200, s.export_session(id));
             }));

  if (impl_->options.access_log) {
    server.set_logger([log = impl_->options.access_log](const httplib::Request& req, const httplib::Response& res) {
      log(req.method, req.path, res.status);
    });
  }
  if (!impl_->options.static_dir.empty()) server.set_mount_point("/", impl_->options.static_dir.string());
}

HttpService::~HttpService() { stop(); }

int HttpService::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace prefopt
