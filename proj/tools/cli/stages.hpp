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

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bevprompt/scene.hpp"
#include "cli/run_config.hpp"

namespace bevprompt::cli {

enum class LogLevel { kDebug, kInfo, kWarn, kError };
using LogField = std::pair<std::string_view, std::string>;

/// One structured `key=value` line on stderr.
void log_event(LogLevel level, std::initializer_list<LogField> fields);
void set_log_level(LogLevel level);

/// Expands manifest paths, scene directories and glob patterns into a sorted,
/// de-duplicated list of manifest files.
std::vector<std::filesystem::path> expand_scene_specs(const std::vector<std::string>& specs);

/// Reads a scene id without full validation (used to label errors early).
std::string peek_scene_id(const std::filesystem::path& manifest);

std::filesystem::path stage_dir(const RunConfig& config, const std::string& scene_id, std::string_view stage);

struct StageResult {
  bool skipped = false;
  std::size_t failures = 0;
};

StageResult run_ingest(const RunConfig& config, const std::filesystem::path& manifest);
StageResult run_render(const RunConfig& config, const std::filesystem::path& manifest);
StageResult run_keyframes(const RunConfig& config, const std::filesystem::path& manifest);
StageResult run_genqa(const RunConfig& config, const std::filesystem::path& manifest);
StageResult run_bundle(const RunConfig& config, const std::filesystem::path& manifest);
/// `failures` counts items whose final attempt failed.
StageResult run_dispatch(const RunConfig& config, const std::filesystem::path& manifest);

/// Scores every scene's shard against its response log and writes the report.
/// `responses_override` replaces the per-scene logs when set.
void run_eval(const RunConfig& config, const std::vector<std::filesystem::path>& manifests,
              const std::optional<std::filesystem::path>& responses_override);

/// FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace bevprompt::cli
