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

#include "bevprompt/keyframes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "bevprompt/bev.hpp"
#include "bevprompt/errors.hpp"
#include "bevprompt/geometry.hpp"

namespace bevprompt {

void validate_params(const VisibilityParams& params) {
  if (params.sample_count < 1) throw Error(ErrorKind::kValidation, "sample_count must be >= 1");
  if (!(params.occlusion_tolerance > 0.0)) throw Error(ErrorKind::kValidation, "occlusion_tolerance must be > 0");
  if (params.border_margin < 0) throw Error(ErrorKind::kValidation, "border_margin must be >= 0");
}

bool visibility_test(const ObjectInstance& obj, const FrameRecord& frame, const DepthImage& depth,
                     const VisibilityParams& params) {
  const auto projected = project_point(obj.obb.center, frame);
  if (!projected || projected->z_cam <= 0.0) return false;
  const double m = params.border_margin;
  const double u = projected->u;
  const double v = projected->v;
  if (u < m || v < m || u >= frame.width - m || v >= frame.height - m) return false;
  if (u >= depth.width() - m || v >= depth.height() - m) return false;
  // Nearest depth pixel under registered RGB-D (pixel centers at integers).
  const int du = std::clamp(static_cast<int>(std::lround(u)), 0, depth.width() - 1);
  const int dv = std::clamp(static_cast<int>(std::lround(v)), 0, depth.height() - 1);
  const double d = depth.at(du, dv);
  if (!(d > 0.0)) return false;
  return projected->z_cam <= d + params.occlusion_tolerance;
}

std::vector<std::size_t> sample_frame_positions(std::size_t frame_count, unsigned n) {
  if (n == 0) throw Error(ErrorKind::kValidation, "sample_count must be >= 1");
  std::vector<std::size_t> positions;
  if (frame_count <= n) {
    for (std::size_t i = 0; i < frame_count; ++i) positions.push_back(i);
    return positions;
  }
  for (std::size_t i = 0; i < n; ++i) positions.push_back(i * frame_count / n);
  return positions;
}

std::vector<CoverStep> first_fit_cover(std::size_t frame_count, std::span<const MarkId> objects,
                                       const std::function<bool(std::size_t, MarkId)>& visible) {
  std::vector<CoverStep> steps;
  std::set<MarkId> covered;
  for (std::size_t f = 0; f < frame_count; ++f) {
    CoverStep step{f, {}};
    for (MarkId id : objects) {
      if (covered.count(id) != 0) continue;
      if (!visible(f, id)) continue;
      step.newly_covered.push_back(id);
      covered.insert(id);
    }
    if (!step.newly_covered.empty()) steps.push_back(std::move(step));
  }
  return steps;
}

DepthImage FrameSource::depth(const FrameRecord& frame, double depth_scale) const {
  return load_depth(frame, depth_scale);
}

RgbImage FrameSource::rgb(const FrameRecord& frame) const { return read_rgb(frame.rgb_path); }

KeyframeResult select_keyframes(const SceneManifest& scene, const std::vector<ObjectInstance>& objects,
                                const KeyframeOptions& options, const FrameSource& source) {
  validate_params(options.params);
  std::map<MarkId, const ObjectInstance*> by_id;
  std::vector<MarkId> order;
  for (const auto& obj : objects) {
    if (scene.find(obj.mark_id) == nullptr) {
      throw Error(ErrorKind::kUnknownMarkId, "mark " + std::to_string(obj.mark_id) + " is not in scene " + scene.scene_id);
    }
    if (by_id.emplace(obj.mark_id, &obj).second) order.push_back(obj.mark_id);
  }

  std::vector<const FrameRecord*> frames;
  for (const auto& f : scene.frames) frames.push_back(&f);
  std::sort(frames.begin(), frames.end(), [](const auto* a, const auto* b) { return a->frame_index < b->frame_index; });
  const auto positions = sample_frame_positions(frames.size(), options.params.sample_count);

  std::vector<std::optional<DepthImage>> depth_cache(positions.size());
  auto visible = [&](std::size_t sample, MarkId id) {
    const FrameRecord& frame = *frames[positions[sample]];
    if (!depth_cache[sample]) depth_cache[sample] = source.depth(frame, scene.depth_scale);
    return visibility_test(*by_id.at(id), frame, *depth_cache[sample], options.params);
  };
  const auto steps = first_fit_cover(positions.size(), order, visible);

  KeyframeResult result;
  for (const auto& step : steps) {
    const FrameRecord& frame = *frames[positions[step.frame]];
    SelectedKeyframe selected;
    selected.frame_index = frame.frame_index;
    selected.newly_covered = step.newly_covered;
    if (options.render_images) {
      selected.image = source.rgb(frame);
      if (selected.image.width() != frame.width || selected.image.height() != frame.height) {
        throw Error(ErrorKind::kDimensionMismatch, "RGB frame " + std::to_string(frame.frame_index) +
                                                       " does not match its declared size");
      }
      MarkStyle style = default_mark_style(std::max(frame.width, frame.height));
      for (MarkId id : step.newly_covered) {
        const auto px = project_point(by_id.at(id)->obb.center, frame);
        style.fill = mark_color(id);
        draw_mark(selected.image, id, px->u, px->v, style);
      }
    }
    result.covered.insert(step.newly_covered.begin(), step.newly_covered.end());
    result.selected.push_back(std::move(selected));
  }
  for (MarkId id : order) {
    if (result.covered.count(id) == 0) result.uncovered.insert(id);
  }
  return result;
}

GridLayout grid_layout(std::size_t count) {
  if (count == 0) throw Error(ErrorKind::kValidation, "stitch_grid needs at least one image");
  if (count > static_cast<std::size_t>(kMaxTilesPerGrid)) {
    throw Error(ErrorKind::kTooManyTiles, std::to_string(count) + " images exceed the 8-tile grid");
  }
  return count <= 2 ? GridLayout{1, 2} : GridLayout{2, 4};
}

RgbImage stitch_grid(std::span<const RgbImage> images, int tile_w, int tile_h) {
  const GridLayout layout = grid_layout(images.size());
  if (tile_w <= 0 || tile_h <= 0) throw Error(ErrorKind::kValidation, "tile size must be positive");
  RgbImage canvas(layout.cols * tile_w, layout.rows * tile_h, Rgb{128, 128, 128});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const RgbImage tile = resize_bilinear(images[i], tile_w, tile_h);
    const int ox = static_cast<int>(i % layout.cols) * tile_w;
    const int oy = static_cast<int>(i / layout.cols) * tile_h;
    for (int y = 0; y < tile_h; ++y) {
      for (int x = 0; x < tile_w; ++x) canvas.set(ox + x, oy + y, tile.at(x, y));
    }
  }
  return canvas;
}

std::vector<RgbImage> stitch_grids(std::span<const RgbImage> images, int tile_w, int tile_h) {
  std::vector<RgbImage> grids;
  for (std::size_t start = 0; start < images.size(); start += kMaxTilesPerGrid) {
    const std::size_t n = std::min<std::size_t>(kMaxTilesPerGrid, images.size() - start);
    grids.push_back(stitch_grid(images.subspan(start, n), tile_w, tile_h));
  }
  return grids;
}

nlohmann::json keyframe_index(const std::string& scene_id, const KeyframeResult& result) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& s : result.selected) {
    frames.push_back({{"frame_index", s.frame_index}, {"newly_covered", s.newly_covered}});
  }
  return {{"scene_id", scene_id},
          {"frames", frames},
          {"covered", std::vector<MarkId>(result.covered.begin(), result.covered.end())},
          {"uncovered", std::vector<MarkId>(result.uncovered.begin(), result.uncovered.end())}};
}

}  // namespace bevprompt
