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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bevprompt {

/// Every failure raised by the library carries one of these kinds so callers
/// (the CLI in particular) can map them onto exit codes without string
/// matching.
enum class ErrorKind {
  kParse,
  kValidation,
  kIo,
  kUnsupportedFormat,
  kDimensionMismatch,
  kDegenerateVector,
  kAmbiguousAngle,
  kEmptyCloud,
  kUnknownMarkId,
  kTooManyTiles,
  kLabelAbsent,
  kNoValidTriplet,
  kNoUnambiguousReference,
  kTooFewCandidates,
  kNoValidPair,
  kNoUnambiguousObject,
  kNoValidRoute,
  kMissingArtifact,
  kTransport,
  kAuth,
  kMalformedResponse,
  kEmptyInput,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for kinds that signal bad input rather than a runtime failure.
bool is_validation_kind(ErrorKind kind);

}  // namespace bevprompt
