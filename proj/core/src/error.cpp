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

#include "prefopt/error.hpp"

namespace prefopt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "InvalidDimension";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kOffGrid: return "OffGrid";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownAction: return "UnknownAction";
    case ErrorCode::kSingularPrior: return "SingularPrior";
    case ErrorCode::kNonSymmetricCovariance: return "NonSymmetricCovariance";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kPendingProposalExists: return "PendingProposalExists";
    case ErrorCode::kNoPendingProposal: return "NoPendingProposal";
    case ErrorCode::kProposalMismatch: return "ProposalMismatch";
    case ErrorCode::kPreferenceBetweenIdenticalActions: return "PreferenceBetweenIdenticalActions";
    case ErrorCode::kIdenticalActions: return "IdenticalActions";
    case ErrorCode::kWrongPhase: return "WrongPhase";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
  }
  return "Unknown";
}

}  // namespace prefopt
