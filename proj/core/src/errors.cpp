// Copyright 2026 The bevprompt Authors.
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

#include "bevprompt/errors.hpp"

#include <string>

namespace bevprompt {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDegenerateVector: return "DegenerateVector";
    case ErrorKind::kAmbiguousAngle: return "AmbiguousAngle";
    case ErrorKind::kEmptyCloud: return "EmptyCloud";
    case ErrorKind::kUnknownMarkId: return "UnknownMarkId";
    case ErrorKind::kTooManyTiles: return "TooManyTiles";
    case ErrorKind::kLabelAbsent: return "LabelAbsent";
    case ErrorKind::kNoValidTriplet: return "NoValidTriplet";
    case ErrorKind::kNoUnambiguousReference: return "NoUnambiguousReference";
    case ErrorKind::kTooFewCandidates: return "TooFewCandidates";
    case ErrorKind::kNoValidPair: return "NoValidPair";
    case ErrorKind::kNoUnambiguousObject: return "NoUnambiguousObject";
    case ErrorKind::kNoValidRoute: return "NoValidRoute";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
    case ErrorKind::kTransport: return "TransportError";
    case ErrorKind::kAuth: return "AuthError";
    case ErrorKind::kMalformedResponse: return "MalformedResponse";
    case ErrorKind::kEmptyInput: return "EmptyInput";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

bool is_validation_kind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kUnsupportedFormat:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kUnknownMarkId:
    case ErrorKind::kMissingArtifact:
    case ErrorKind::kEmptyInput:
      return true;
    default:
      return false;
  }
}

}  // namespace bevprompt
