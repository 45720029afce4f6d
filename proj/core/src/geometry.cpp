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

#include "bevprompt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bevprompt/errors.hpp"

namespace bevprompt {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kAngleGrid = 1e9;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return cross2(a - o, b - o);
}

bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
         p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Segment2& s, const Segment2& t) {
  const double d1 = orient(t.first, t.second, s.first);
  const double d2 = orient(t.first, t.second, s.second);
  const double d3 = orient(s.first, s.second, t.first);
  const double d4 = orient(s.first, s.second, t.second);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(s.first, t.first, t.second)) return true;
  if (d2 == 0 && on_segment(s.second, t.first, t.second)) return true;
  if (d3 == 0 && on_segment(t.first, s.first, s.second)) return true;
  if (d4 == 0 && on_segment(t.second, s.first, s.second)) return true;
  return false;
}

}  // namespace

Heading2D::Heading2D(const Eigen::Vector2d& origin, const Eigen::Vector2d& direction) : origin_(origin) {
  const double n = direction.norm();
  if (!(n >= kVectorEpsilon)) throw Error(ErrorKind::kDegenerateVector, "heading direction has zero length");
  direction_ = direction / n;
}

Heading2D Heading2D::toward(const Eigen::Vector2d& origin, const Eigen::Vector2d& target) {
  return Heading2D(origin, target - origin);
}

std::optional<PixelProjection> project_point(const Eigen::Vector3d& p_world, const FrameRecord& frame) {
  const Eigen::Matrix3d r = frame.extrinsic.topLeftCorner<3, 3>();
  const Eigen::Vector3d t = frame.extrinsic.topRightCorner<3, 1>();
  const Eigen::Vector3d cam = r.transpose() * (p_world - t);
  if (cam.z() <= kGeometryEpsilon) return std::nullopt;
  const auto& k = frame.intrinsics;
  return PixelProjection{k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy, cam.z()};
}

Eigen::Vector3d back_project(const PixelProjection& pixel, const FrameRecord& frame) {
  const auto& k = frame.intrinsics;
  const Eigen::Vector3d cam((pixel.u - k.cx) * pixel.z_cam / k.fx, (pixel.v - k.cy) * pixel.z_cam / k.fy, pixel.z_cam);
  return frame.extrinsic.topLeftCorner<3, 3>() * cam + frame.extrinsic.topRightCorner<3, 1>();
}

std::array<Eigen::Vector3d, 8> obb_corners(const OrientedBox& box) {
  std::array<Eigen::Vector3d, 8> corners;
  const Eigen::Matrix3d& r = box.rotation;
  for (int i = 0; i < 8; ++i) {
    const double hx = (i & 1 ? 0.5 : -0.5) * box.extents.x();
    const double hy = (i & 2 ? 0.5 : -0.5) * box.extents.y();
    const double hz = (i & 4 ? 0.5 : -0.5) * box.extents.z();
    // Written out per component so the result does not depend on how a
    // matrix library orders the accumulation.
    for (int k = 0; k < 3; ++k) corners[i][k] = box.center[k] + (r(k, 0) * hx + r(k, 1) * hy + r(k, 2) * hz);
  }
  return corners;
}

double min_corner_distance(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = obb_corners(a);
  const auto cb = obb_corners(b);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ca) {
    for (const auto& q : cb) {
      const double dx = p.x() - q.x();
      const double dy = p.y() - q.y();
      const double dz = p.z() - q.z();
      best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
  }
  return best;
}

double center_distance(const ObjectInstance& a, const ObjectInstance& b) {
  return (a.obb.center - b.obb.center).norm();
}

double signed_angle(const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
  if (!(from.norm() >= kVectorEpsilon) || !(to.norm() >= kVectorEpsilon)) {
    throw Error(ErrorKind::kDegenerateVector, "signed_angle needs two nonzero vectors");
  }
  // atan2 of (-cross, dot) measures clockwise rotation with y forward.
  double deg = std::atan2(-cross2(from, to), from.dot(to)) * kRadToDeg;
  deg = std::round(deg * kAngleGrid) / kAngleGrid;
  if (deg <= -180.0) deg = 180.0;
  if (deg == 0.0) deg = 0.0;  // drop the sign of -0
  return deg;
}

std::string_view direction_bin(double angle_deg, DirectionScheme scheme) {
  if (!std::isfinite(angle_deg)) throw Error(ErrorKind::kValidation, "angle must be finite");
  double a = std::fmod(angle_deg, 360.0);
  if (a > 180.0) a -= 360.0;
  if (a <= -180.0) a += 360.0;
  if (scheme == DirectionScheme::kFourWay) {
    if (a >= -45.0 && a < 45.0) return "front";
    if (a >= 45.0 && a < 135.0) return "right";
    if (a >= -135.0 && a < -45.0) return "left";
    return "back";
  }
  if (a == 0.0 || a == 90.0 || a == -90.0 || a == 180.0) {
    throw Error(ErrorKind::kAmbiguousAngle, std::to_string(a) + " degrees lies on a quadrant boundary");
  }
  if (a > 0.0 && a < 90.0) return "front-right";
  if (a > 90.0) return "back-right";
  if (a < -90.0) return "back-left";
  return "front-left";
}

const std::vector<std::string_view>& direction_labels(DirectionScheme scheme) {
  static const std::vector<std::string_view> four = {"front", "right", "back", "left"};
  static const std::vector<std::string_view> quad = {"front-left", "front-right", "back-left", "back-right"};
  return scheme == DirectionScheme::kFourWay ? four : quad;
}

std::string_view scheme_name(DirectionScheme scheme) {
  return scheme == DirectionScheme::kFourWay ? "four_way" : "quadrant";
}

DirectionScheme parse_scheme(std::string_view name) {
  if (name == "four_way" || name == "FOUR_WAY") return DirectionScheme::kFourWay;
  if (name == "quadrant" || name == "QUADRANT") return DirectionScheme::kQuadrant;
  throw Error(ErrorKind::kValidation, "unknown direction scheme '" + std::string(name) + "'");
}

Polygon2 convex_hull(std::vector<Eigen::Vector2d> points) {
  std::sort(points.begin(), points.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;
  Polygon2 hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i > 0; --i) {
    const auto& p = points[i - 1];
    while (k >= lower && orient(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

Polygon2 footprint_polygon(const OrientedBox& box) {
  std::vector<Eigen::Vector2d> projected;
  projected.reserve(8);
  for (const auto& c : obb_corners(box)) projected.push_back(c.head<2>());
  return convex_hull(std::move(projected));
}

bool polygon_contains(const Polygon2& poly, const Eigen::Vector2d& p, double tolerance) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    const Eigen::Vector2d edge = b - a;
    if (cross2(edge, p - a) < -tolerance * edge.norm()) return false;
  }
  return true;
}

double point_segment_distance(const Eigen::Vector2d& p, const Segment2& seg) {
  const Eigen::Vector2d d = seg.second - seg.first;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - seg.first).norm();
  const double t = std::clamp((p - seg.first).dot(d) / len2, 0.0, 1.0);
  return (p - (seg.first + t * d)).norm();
}

double segment_clearance(const Segment2& seg, const Polygon2& poly) {
  if (poly.size() < 3) throw Error(ErrorKind::kValidation, "segment_clearance needs a polygon with >= 3 vertices");
  if (polygon_contains(poly, seg.first) || polygon_contains(poly, seg.second)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Segment2 edge{poly[i], poly[(i + 1) % poly.size()]};
    if (segments_intersect(seg, edge)) return 0.0;
    best = std::min({best, point_segment_distance(seg.first, edge), point_segment_distance(seg.second, edge),
                     point_segment_distance(edge.first, seg)});
  }
  return best;
}

}  // namespace bevprompt
