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

#ifndef PREFOPT_HTTP_SERVICE_HPP
#define PREFOPT_HTTP_SERVICE_HPP

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "prefopt/error.hpp"
#include "prefopt/session.hpp"

namespace prefopt {

struct HttpOptions {
  /// Served under "/" when set (for a browser frontend).
  std::filesystem::path static_dir;
  /// Worker threads; 0 picks the library default.
  std::size_t threads = 0;
  /// Called once per handled request.
  std::function<void(const std::string& method, const std::string& path, int status)> access_log;
};

/// JSON-over-HTTP front end for a SessionStore.
///
///   POST /sessions                    {"label"?, "config"?, "seed"?}
///   GET  /sessions
///   POST /sessions/{id}/next-pair
///   POST /sessions/{id}/execution     {"outcomes"?: [{"success", "tags", "video_url"}]}
///   POST /sessions/{id}/preference    {"verdict"} or {"pairs": [[preferred, rejected], ...]}
///   GET  /sessions/{id}/posterior
///   GET  /sessions/{id}/export
///
/// Errors are {"error": code, "message": text}; unknown sessions map to 404,
/// phase violations to 409 (with the pending proposal attached), invalid
/// requests to 400 and storage failures to 500.
class HttpService {
 public:
  explicit HttpService(SessionStore& store, HttpOptions options = {});
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds to an ephemeral port and returns it, or -1.
  int bind_to_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status used for an error code.
int http_status(ErrorCode code);

}  // namespace prefopt

#endif  // PREFOPT_HTTP_SERVICE_HPP
