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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/bev.hpp"
#include "bevprompt/bundle.hpp"
#include "bevprompt/gateway.hpp"
#include "bevprompt/keyframes.hpp"
#include "bevprompt/qa.hpp"

namespace bevprompt::cli {

/// Settings shared by every subcommand. Loaded from `--config`, then
/// overridden by command-line flags.
struct RunConfig {
  /// Manifest paths, scene directories or glob patterns.
  std::vector<std::string> scenes;
  std::filesystem::path output_root = "out";
  unsigned workers = 1;
  bool force = false;
  bool strict = false;

  BevOptions bev;
  CeilingOptions ceiling;

  VisibilityParams visibility;
  int tile_width = kDefaultTileWidth;
  int tile_height = kDefaultTileHeight;

  std::uint64_t seed = 0;
  unsigned count_per_category = 4;
  std::vector<QaCategory> categories;
  DirectionScheme scheme = DirectionScheme::kFourWay;
  double min_separation_px = 20.0;
  QaOptions qa;
  std::optional<std::filesystem::path> import_shard;
  bool stubs = false;

  BundleOptions ablation;

  std::optional<GatewayConfig> gateway;
  unsigned concurrency = 1;

  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> table_path;
  bool weighted = false;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
/// Parameters that affect stage outputs, used for up-to-date stamps.
nlohmann::json stage_parameters(const RunConfig& config, std::string_view stage);

}  // namespace bevprompt::cli
