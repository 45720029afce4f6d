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

// Deterministic fixture scene used by tests, benchmarks and `bevprompt synth`.

#include <filesystem>
#include <string>
#include <vector>

#include "bevprompt/scene.hpp"

namespace bevprompt {

struct SyntheticOptions {
  std::string scene_id = "synthetic_room";
  int frame_count = 24;
  int width = 160;
  int height = 120;
  /// Sampling step of room surfaces and object faces.
  double point_spacing_m = 0.025;
};

/// Room of 6 m x 5 m x 2.6 m with furniture; two chairs share a label.
std::vector<ObjectInstance> synthetic_objects();
/// Floor, walls, ceiling and box surfaces, colored per surface.
PointCloud synthetic_cloud(const std::vector<ObjectInstance>& objects, double spacing_m = 0.025);
/// Writes cloud.ply, frames/*.png and manifest.json under `dir` and returns
/// the reloaded manifest. Output bytes depend only on `options`.
SceneManifest write_synthetic_scene(const std::filesystem::path& dir, const SyntheticOptions& options = {});

}  // namespace bevprompt
