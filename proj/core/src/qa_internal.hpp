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

// Helpers shared by the QA generator translation units.

#include <cmath>
#include <string>

#include "bevprompt/qa.hpp"

namespace bevprompt::detail {

/// "label [id]" as used in question text.
inline std::string tagged(const ObjectInstance& obj) { return obj.label + " [" + std::to_string(obj.mark_id) + "]"; }

/// Rounds to 1/scale (scale 100 -> 0.01). Division keeps results like 1.41 exact.
inline double round_to(double value, double scale) { return std::round(value * scale) / scale; }

inline nlohmann::json object_ref(const ObjectInstance& obj) {
  return {{"mark_id", obj.mark_id}, {"label", obj.label}};
}

std::string default_qa_id(const SceneManifest& scene, QaCategory category, std::uint64_t seed);

QAItem numeric_item(const SceneManifest& scene, QaCategory category, std::uint64_t seed, std::string question,
                    double value, std::string unit);
QAItem choice_item(const SceneManifest& scene, QaCategory category, std::uint64_t seed, std::string question,
                   std::vector<std::string> choices, std::size_t correct);

}  // namespace bevprompt::detail
