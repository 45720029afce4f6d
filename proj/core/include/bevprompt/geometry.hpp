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

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bevprompt/scene.hpp"

namespace bevprompt {

inline constexpr double kVectorEpsilon = 1e-9;
inline constexpr double kGeometryEpsilon = 1e-6;

using Polygon2 = std::vector<Eigen::Vector2d>;
using Segment2 = std::pair<Eigen::Vector2d, Eigen::Vector2d>;

/// Agent pose on the floor plane: a position and a unit facing direction.
class Heading2D {
 public:
  /// Throws DegenerateVector when `direction` is (near) zero; normalizes otherwise.
  Heading2D(const Eigen::Vector2d& origin, const Eigen::Vector2d& direction);
  static Heading2D toward(const Eigen::Vector2d& origin, const Eigen::Vector2d& target);

  const Eigen::Vector2d& origin() const { return origin_; }
  const Eigen::Vector2d& direction() const { return direction_; }

 private:
  Eigen::Vector2d origin_;
  Eigen::Vector2d direction_;
};

enum class DirectionScheme { kFourWay, kQuadrant };

/// Image-plane projection of a world point with its camera-space depth.
struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double z_cam = 0.0;
};

/// Pinhole projection; absent when the point is at or behind the camera.
std::optional<PixelProjection> project_point(const Eigen::Vector3d& p_world, const FrameRecord& frame);
Eigen::Vector3d back_project(const PixelProjection& pixel, const FrameRecord& frame);

/// Corner i uses sign +1 on axis k when bit k of i is set, -1 otherwise:
///   corner(i) = center + R * (s0 * ex/2, s1 * ey/2, s2 * ez/2).
std::array<Eigen::Vector3d, 8> obb_corners(const OrientedBox& box);

/// Minimum Euclidean distance over the 8x8 corner pairs.
double min_corner_distance(const OrientedBox& a, const OrientedBox& b);
double center_distance(const ObjectInstance& a, const ObjectInstance& b);

/// Planar angle in degrees, in (-180, 180], positive when `to` is clockwise of
/// `from` viewed from above (x right, y forward). Results are snapped to a
/// 1e-9 degree grid so that exact-boundary configurations bin consistently.
double signed_angle(const Eigen::Vector2d& from, const Eigen::Vector2d& to);

/// FOUR_WAY: front [-45, 45), right [45, 135), back [135, 180] U (-180, -135),
/// left [-135, -45). QUADRANT: open 90-degree sectors; exact multiples of 90
/// throw AmbiguousAngle.
std::string_view direction_bin(double angle_deg, DirectionScheme scheme);
/// Labels in the fixed order used for multiple-choice options.
const std::vector<std::string_view>& direction_labels(DirectionScheme scheme);
std::string_view scheme_name(DirectionScheme scheme);
DirectionScheme parse_scheme(std::string_view name);

/// Convex hull of the box's corners projected to XY, counterclockwise,
/// without collinear vertices. Four vertices for upright boxes.
Polygon2 footprint_polygon(const OrientedBox& box);
/// Andrew's monotone chain; counterclockwise, collinear points dropped.
Polygon2 convex_hull(std::vector<Eigen::Vector2d> points);
bool polygon_contains(const Polygon2& convex_ccw, const Eigen::Vector2d& p, double tolerance = 0.0);

double point_segment_distance(const Eigen::Vector2d& p, const Segment2& seg);
/// 0 when the segment touches or enters the polygon; the minimum
/// segment-to-boundary distance otherwise.
double segment_clearance(const Segment2& seg, const Polygon2& convex_ccw);

inline Eigen::Vector2d xy(const Eigen::Vector3d& p) { return p.head<2>(); }

}  // namespace bevprompt
