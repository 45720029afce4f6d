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

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/image.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {

inline constexpr int kDefaultTileWidth = 256;
inline constexpr int kDefaultTileHeight = 246;
inline constexpr int kMaxTilesPerGrid = 8;

struct VisibilityParams {
  unsigned sample_count = 32;
  double occlusion_tolerance = 0.15;
  int border_margin = 8;
};

void validate_params(const VisibilityParams& params);

/// Center-point visibility: inside the image with border margin, in front of
/// the camera, on a valid depth pixel, and no farther than depth + tolerance.
bool visibility_test(const ObjectInstance& obj, const FrameRecord& frame, const DepthImage& depth,
                     const VisibilityParams& params);

/// Positions (into a frame list sorted by frame_index) of up to `n` frames
/// spread uniformly over `frame_count`.
std::vector<std::size_t> sample_frame_positions(std::size_t frame_count, unsigned n);

struct CoverStep {
  std::size_t frame = 0;
  std::vector<MarkId> newly_covered;
};

/// Single-pass first-fit cover: each frame, in order, claims every
/// not-yet-covered object it sees; frames that claim nothing are skipped.
/// `visible` is only queried for objects still uncovered when a frame is scanned.
std::vector<CoverStep> first_fit_cover(std::size_t frame_count, std::span<const MarkId> objects,
                                       const std::function<bool(std::size_t, MarkId)>& visible);

/// Supplies frame pixels; the default implementation reads the files named
/// in the FrameRecord.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual DepthImage depth(const FrameRecord& frame, double depth_scale) const;
  virtual RgbImage rgb(const FrameRecord& frame) const;
};

struct SelectedKeyframe {
  std::uint32_t frame_index = 0;
  std::vector<MarkId> newly_covered;
  RgbImage image;
};

struct KeyframeResult {
  std::vector<SelectedKeyframe> selected;
  std::set<MarkId> covered;
  std::set<MarkId> uncovered;
};

struct KeyframeOptions {
  VisibilityParams params;
  /// Load RGB and draw marks for selected frames. Off for pure selection.
  bool render_images = true;
};

/// Visibility-cover keyframe selection over `objects` (a subset of the scene).
/// Only newly covered objects are marked on each selected frame.
KeyframeResult select_keyframes(const SceneManifest& scene, const std::vector<ObjectInstance>& objects,
                                const KeyframeOptions& options, const FrameSource& source = FrameSource{});

struct GridLayout {
  int rows = 1;
  int cols = 2;
};

/// 1x2 for up to two images, 2x4 for up to eight. Throws TooManyTiles above eight.
GridLayout grid_layout(std::size_t count);
/// Row-major tiles resized to tile_w x tile_h; unused cells mid-gray.
RgbImage stitch_grid(std::span<const RgbImage> images, int tile_w = kDefaultTileWidth,
                     int tile_h = kDefaultTileHeight);
/// Splits into chunks of eight and stitches each.
std::vector<RgbImage> stitch_grids(std::span<const RgbImage> images, int tile_w = kDefaultTileWidth,
                                   int tile_h = kDefaultTileHeight);

nlohmann::json keyframe_index(const std::string& scene_id, const KeyframeResult& result);

}  // namespace bevprompt
