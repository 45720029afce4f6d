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

// Independent reference implementations used as test oracles. Each one is
// written from the defining formula, not from the library code.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bevprompt/scene.hpp"

namespace oracle {

/// Corners as center + R * (sx * ex/2, sy * ey/2, sz * ez/2) for every sign triple.
inline std::vector<Eigen::Vector3d> box_corners(const bevprompt::OrientedBox& box) {
  std::vector<Eigen::Vector3d> out;
  for (double sz : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      for (double sx : {-1.0, 1.0}) {
        const double h[3] = {sx * (box.extents.x() / 2.0), sy * (box.extents.y() / 2.0), sz * (box.extents.z() / 2.0)};
        Eigen::Vector3d c;
        for (int row = 0; row < 3; ++row) {
          double dot = box.rotation(row, 0) * h[0];
          dot = dot + box.rotation(row, 1) * h[1];
          dot = dot + box.rotation(row, 2) * h[2];
          c[row] = box.center[row] + dot;
        }
        out.push_back(c);
      }
    }
  }
  return out;
}

/// Minimum over all 64 corner pairs.
inline double brute_force_corner_distance(const bevprompt::OrientedBox& a, const bevprompt::OrientedBox& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : box_corners(a)) {
    for (const auto& q : box_corners(b)) {
      const double dx = p.x() - q.x();
      const double dy = p.y() - q.y();
      const double dz = p.z() - q.z();
      best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
  }
  return best;
}

/// Percentile with linear interpolation between closest ranks (numpy's default).
inline double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Brute-force hull: a point is a hull vertex unless it lies inside (or on an
/// edge between two others of) some triangle of other points. Returns the set
/// of vertex coordinates rounded to 1e-9 for comparison.
inline std::set<std::pair<long long, long long>> hull_vertex_set(const std::vector<Eigen::Vector2d>& pts) {
  auto key = [](const Eigen::Vector2d& p) {
    return std::make_pair(std::llround(p.x() * 1e9), std::llround(p.y() * 1e9));
  };
  std::vector<Eigen::Vector2d> unique;
  std::set<std::pair<long long, long long>> seen;
  for (const auto& p : pts) {
    if (seen.insert(key(p)).second) unique.push_back(p);
  }
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::set<std::pair<long long, long long>> out;
  const std::size_t n = unique.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool interior = false;
    for (std::size_t a = 0; a < n && !interior; ++a) {
      for (std::size_t b = 0; b < n && !interior; ++b) {
        for (std::size_t c = 0; c < n && !interior; ++c) {
          if (a == i || b == i || c == i || a == b || b == c || a == c) continue;
          const double d1 = cross(unique[a], unique[b], unique[i]);
          const double d2 = cross(unique[b], unique[c], unique[i]);
          const double d3 = cross(unique[c], unique[a], unique[i]);
          const double area = std::abs(cross(unique[a], unique[b], unique[c]));
          if (area < 1e-12) continue;
          const bool has_neg = d1 < -1e-12 || d2 < -1e-12 || d3 < -1e-12;
          const bool has_pos = d1 > 1e-12 || d2 > 1e-12 || d3 > 1e-12;
          if (!(has_neg && has_pos)) interior = true;
        }
      }
    }
    // Points on a hull edge between two other points are not vertices.
    for (std::size_t a = 0; a < n && !interior; ++a) {
      for (std::size_t b = 0; b < n && !interior; ++b) {
        if (a == i || b == i || a == b) continue;
        const Eigen::Vector2d ab = unique[b] - unique[a];
        const Eigen::Vector2d ai = unique[i] - unique[a];
        if (std::abs(ab.x() * ai.y() - ab.y() * ai.x()) < 1e-12 && ai.dot(ab) > 0 && ai.squaredNorm() < ab.squaredNorm()) {
          interior = true;
        }
      }
    }
    if (!interior) out.insert(key(unique[i]));
  }
  return out;
}

/// Distance from p to segment [a, b] by dense sampling of the segment.
inline double sampled_point_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                    int samples = 4000) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    best = std::min(best, (a + t * (b - a) - p).norm());
  }
  return best;
}

/// Clearance between a segment and a polygon boundary, by sampling the boundary.
inline double sampled_clearance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                const std::vector<Eigen::Vector2d>& poly, int samples_per_edge = 400) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
    for (int s = 0; s <= samples_per_edge; ++s) {
      const Eigen::Vector2d x = p + (q - p) * (static_cast<double>(s) / samples_per_edge);
      const Eigen::Vector2d d = b - a;
      const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (a + t * d - x).norm());
    }
  }
  return best;
}

/// Footprint as an ordered polygon: the brute-force hull vertices sorted by
/// angle around their mean.
inline std::vector<Eigen::Vector2d> footprint(const bevprompt::OrientedBox& box) {
  std::vector<Eigen::Vector2d> projected;
  for (const auto& c : box_corners(box)) projected.push_back(c.head<2>());
  std::vector<Eigen::Vector2d> poly;
  for (const auto& [x, y] : hull_vertex_set(projected)) poly.emplace_back(x * 1e-9, y * 1e-9);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : poly) mean += p;
  mean /= static_cast<double>(poly.size());
  std::sort(poly.begin(), poly.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a.y() - mean.y(), a.x() - mean.x()) < std::atan2(b.y() - mean.y(), b.x() - mean.x());
  });
  return poly;
}

/// Smallest sampled distance from any route segment to any footprint that is
/// neither on the route nor stop-listed.
inline double route_clearance(const bevprompt::SceneManifest& scene, const std::vector<bevprompt::MarkId>& waypoints,
                              const std::set<std::string>& stoplist) {
  auto center = [&](bevprompt::MarkId id) -> Eigen::Vector2d {
    for (const auto& o : scene.objects) {
      if (o.mark_id == id) return o.obb.center.head<2>();
    }
    return {std::nan(""), std::nan("")};
  };
  double best = std::numeric_limits<double>::infinity();
  for (const auto& obj : scene.objects) {
    if (stoplist.count(obj.label) != 0) continue;
    if (std::find(waypoints.begin(), waypoints.end(), obj.mark_id) != waypoints.end()) continue;
    const auto poly = footprint(obj.obb);
    for (std::size_t k = 0; k + 1 < waypoints.size(); ++k) {
      best = std::min(best, sampled_clearance(center(waypoints[k]), center(waypoints[k + 1]), poly));
    }
  }
  return best;
}

/// Clockwise-positive planar angle in degrees, written from atan2 directly.
inline double clockwise_degrees(const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
  const double cross = from.x() * to.y() - from.y() * to.x();
  return -std::atan2(cross, from.dot(to)) * 180.0 / 3.14159265358979323846;
}

/// Navigation actions along a waypoint chain: "Go Forward", "Turn Left" or "Turn Right".
inline std::vector<std::string> route_actions(const std::vector<Eigen::Vector2d>& centers, const Eigen::Vector2d& facing,
                                              double threshold_deg) {
  std::vector<std::string> out;
  Eigen::Vector2d heading = facing - centers.front();
  for (std::size_t k = 0; k + 1 < centers.size(); ++k) {
    const Eigen::Vector2d seg = centers[k + 1] - centers[k];
    const double theta = clockwise_degrees(heading, seg);
    out.push_back(std::abs(theta) <= threshold_deg ? "Go Forward" : (theta > 0 ? "Turn Right" : "Turn Left"));
    heading = seg;
  }
  return out;
}

/// Literal transcription of the keyframe loop:
///   for each sampled frame I_i:
///     for each object o_j not yet in O_F:
///       if o_j is visible in I_i: mark it, add it to O_F, remember I_i
///     if I_i received a mark: add I_i to the key frame set
struct KeyframeStep {
  std::size_t frame = 0;
  std::vector<bevprompt::MarkId> newly_covered;
};

template <typename Visible>
std::vector<KeyframeStep> algorithm_one(std::size_t frames, const std::vector<bevprompt::MarkId>& objects, Visible visible) {
  std::vector<KeyframeStep> keys;
  std::set<bevprompt::MarkId> covered;
  for (std::size_t i = 0; i < frames; ++i) {
    KeyframeStep step{i, {}};
    for (bevprompt::MarkId o_j : objects) {
      if (covered.count(o_j) != 0) continue;
      if (visible(i, o_j)) {
        step.newly_covered.push_back(o_j);
        covered.insert(o_j);
      }
    }
    if (!step.newly_covered.empty()) keys.push_back(step);
  }
  return keys;
}

/// Hand-written interval tables for direction bins (integer degrees).
inline std::string four_way_table(int deg) {
  if (deg >= -45 && deg <= 44) return "front";
  if (deg >= 45 && deg <= 134) return "right";
  if (deg >= -135 && deg <= -46) return "left";
  return "back";  // [135, 180] and (-180, -136]
}

/// Empty string marks the ambiguous axis angles.
inline std::string quadrant_table(int deg) {
  if (deg == 0 || deg == 90 || deg == -90 || deg == 180) return "";
  if (deg > 0 && deg < 90) return "front-right";
  if (deg > 90 && deg < 180) return "back-right";
  if (deg > -180 && deg < -90) return "back-left";
  return "front-left";
}

/// Mean relative accuracy straight from its definition.
inline double mra(double p, double g) {
  if (g == 0.0) return p == 0.0 ? 1.0 : 0.0;
  int hits = 0;
  for (int k = 0; k < 10; ++k) {
    const double theta = 0.50 + 0.05 * k;
    const double bound = std::round((1.0 - theta) * 100.0) / 100.0;
    if (std::abs(p - g) / g < bound) ++hits;
  }
  return hits / 10.0;
}

}  // namespace oracle
