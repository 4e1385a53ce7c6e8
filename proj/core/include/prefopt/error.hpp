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

#ifndef PREFOPT_ERROR_HPP
#define PREFOPT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefopt {

enum class ErrorCode {
  kInvalidDimension,
  kOutOfBounds,
  kOffGrid,
  kDimensionMismatch,
  kUnknownAction,
  kSingularPrior,
  kNonSymmetricCovariance,
  kInvalidConfig,
  kPendingProposalExists,
  kNoPendingProposal,
  kProposalMismatch,
  kPreferenceBetweenIdenticalActions,
  kIdenticalActions,
  kWrongPhase,
  kUnknownSession,
  kStorageFailure,
  kMalformedDocument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures are reported through this type; `code()` identifies
/// the failure class so callers (CLI, HTTP layer) can map it to exit codes or
/// status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prefopt

#endif  // PREFOPT_ERROR_HPP
