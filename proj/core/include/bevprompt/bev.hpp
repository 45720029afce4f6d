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

#include <optional>
#include <set>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bevprompt/geometry.hpp"
#include "bevprompt/image.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {

inline constexpr int kDefaultBevResolution = 640;
inline constexpr int kDefaultBevMargin = 16;
inline constexpr double kDefaultCeilingFraction = 0.92;

/// Affine map from world XY (meters) to continuous pixel coordinates (u
/// right, v down). Pixel (i, j) covers [i, i+1) x [j, j+1).
class BevTransform {
 public:
  BevTransform() = default;
  explicit BevTransform(const Eigen::Matrix<double, 2, 3>& world_to_pixel);

  Eigen::Vector2d to_pixel(const Eigen::Vector2d& world_xy) const;
  Eigen::Vector2d to_world(const Eigen::Vector2d& pixel) const;
  const Eigen::Matrix<double, 2, 3>& matrix() const { return world_to_pixel_; }

 private:
  Eigen::Matrix<double, 2, 3> world_to_pixel_ = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Matrix<double, 2, 3> pixel_to_world_ = Eigen::Matrix<double, 2, 3>::Zero();
};

struct DrawnMark {
  MarkId mark_id = 0;
  double u = 0.0;
  double v = 0.0;
  int radius_px = 0;
};

struct BevCanvas {
  RgbImage image;
  BevTransform transform;
  double rotation_deg = 0.0;
  double meters_per_pixel = 0.0;
  int margin_px = kDefaultBevMargin;
  int resolution = kDefaultBevResolution;
  /// Marks in draw order, appended by draw_marks.
  std::vector<DrawnMark> marks;
};

struct MarkStyle {
  int radius_px = 8;
  Rgb fill = {230, 25, 75};
  Rgb text = {255, 255, 255};
  Rgb outline = {0, 0, 0};
};

struct CeilingOptions {
  double keep_fraction = kDefaultCeilingFraction;
  double min_span_m = 0.1;
};

/// Linear-interpolated percentile (q in [0, 100]) of the point heights.
double height_percentile(const PointCloud& cloud, double q);
/// Drops points above z1 + keep_fraction * (z99 - z1). Flat clouds pass through.
PointCloud remove_ceiling(const PointCloud& cloud, const CeilingOptions& options = {});

struct BevOptions {
  int resolution = kDefaultBevResolution;
  int margin_px = kDefaultBevMargin;
  Rgb background = {255, 255, 255};
  Rgb uncolored_point = {96, 96, 96};
};

/// Orthographic top-down render. The world is rotated counterclockwise by
/// `rotation_deg` about the cloud's XY centroid, which lands on the image
/// center; the scale fits the rotated cloud inside the margins.
BevCanvas render_bev(const PointCloud& cloud, double rotation_deg, const BevOptions& options = {});

/// Rotation (degrees, counterclockwise) that points `heading` at the top of the image.
double heading_rotation(const Heading2D& heading);

int mark_radius_for(int resolution);
Rgb mark_color(MarkId id);
MarkStyle default_mark_style(int resolution);

/// Draws numbered marks at each retained object's center, ascending by mark_id.
/// Throws UnknownMarkId when the filter names an id absent from `objects`.
void draw_marks(BevCanvas& canvas, const std::vector<ObjectInstance>& objects,
                const std::optional<std::set<MarkId>>& filter_ids);
/// Draws one mark at a pixel position (also used on keyframes).
void draw_mark(RgbImage& image, MarkId id, double u, double v, const MarkStyle& style);

/// Scale, rotation, translation and resolution of a canvas.
nlohmann::json transform_sidecar(const BevCanvas& canvas);

}  // namespace bevprompt
