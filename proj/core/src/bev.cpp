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

#include "bevprompt/bev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bevprompt/errors.hpp"

namespace bevprompt {
namespace {

// Exact values at multiples of 90 degrees keep quarter-turn renders symmetric.
std::pair<double, double> sincos_deg(double deg) {
  const double q = deg / 90.0;
  if (q == std::round(q)) {
    const long k = ((static_cast<long>(std::round(q)) % 4) + 4) % 4;
    constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    return {kSin[k], kCos[k]};
  }
  const double rad = deg * std::numbers::pi / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

// Kelly's high-contrast palette minus white/black.
constexpr std::array<Rgb, 20> kPalette = {{
    {230, 25, 75},  {60, 180, 75},   {0, 130, 200},   {245, 130, 48}, {145, 30, 180},
    {70, 190, 190}, {240, 50, 230},  {150, 150, 20},  {200, 80, 80},  {0, 128, 128},
    {170, 110, 40}, {128, 0, 0},     {60, 120, 60},   {128, 128, 0},  {0, 0, 128},
    {100, 100, 100}, {255, 90, 160}, {90, 60, 200},   {30, 100, 160}, {190, 120, 0},
}};

}  // namespace

BevTransform::BevTransform(const Eigen::Matrix<double, 2, 3>& world_to_pixel) : world_to_pixel_(world_to_pixel) {
  const Eigen::Matrix2d a = world_to_pixel.leftCols<2>();
  const double det = a.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw Error(ErrorKind::kValidation, "BEV transform is singular");
  const Eigen::Matrix2d inv = a.inverse();
  pixel_to_world_.leftCols<2>() = inv;
  pixel_to_world_.col(2) = -inv * world_to_pixel.col(2);
}

Eigen::Vector2d BevTransform::to_pixel(const Eigen::Vector2d& w) const {
  return world_to_pixel_.leftCols<2>() * w + world_to_pixel_.col(2);
}

Eigen::Vector2d BevTransform::to_world(const Eigen::Vector2d& p) const {
  return pixel_to_world_.leftCols<2>() * p + pixel_to_world_.col(2);
}

double height_percentile(const PointCloud& cloud, double q) {
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "cannot take a percentile of an empty cloud");
  std::vector<double> z;
  z.reserve(cloud.size());
  for (const auto& p : cloud.points) z.push_back(p.z());
  std::sort(z.begin(), z.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(z.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, z.size() - 1);
  return z[lo] + (z[hi] - z[lo]) * (pos - static_cast<double>(lo));
}

PointCloud remove_ceiling(const PointCloud& cloud, const CeilingOptions& options) {
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "remove_ceiling on an empty cloud");
  const double z1 = height_percentile(cloud, 1.0);
  const double z99 = height_percentile(cloud, 99.0);
  if (z99 - z1 < options.min_span_m) return cloud;
  const double cutoff = z1 + options.keep_fraction * (z99 - z1);
  PointCloud kept;
  if (cloud.colors) kept.colors.emplace();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].z() > cutoff) continue;
    kept.points.push_back(cloud.points[i]);
    if (cloud.colors) kept.colors->push_back((*cloud.colors)[i]);
  }
  return kept;
}

BevCanvas render_bev(const PointCloud& cloud, double rotation_deg, const BevOptions& options) {
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "render_bev on an empty cloud");
  if (options.resolution <= 2 * options.margin_px) {
    throw Error(ErrorKind::kValidation, "resolution must exceed twice the margin");
  }
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : cloud.points) centroid += p.head<2>();
  centroid /= static_cast<double>(cloud.size());

  const auto [sn, cs] = sincos_deg(rotation_deg);
  double half = 0.0;
  for (const auto& p : cloud.points) {
    const double dx = p.x() - centroid.x();
    const double dy = p.y() - centroid.y();
    half = std::max({half, std::abs(cs * dx - sn * dy), std::abs(sn * dx + cs * dy)});
  }
  const double extent = std::max(2.0 * half, 0.01);
  const int usable = options.resolution - 2 * options.margin_px;

  BevCanvas canvas;
  canvas.resolution = options.resolution;
  canvas.margin_px = options.margin_px;
  canvas.rotation_deg = rotation_deg;
  canvas.meters_per_pixel = extent / usable;
  const double s = 1.0 / canvas.meters_per_pixel;
  const double c = options.resolution / 2.0;
  Eigen::Matrix<double, 2, 3> m;
  m << s * cs, -s * sn, c - s * (cs * centroid.x() - sn * centroid.y()),
      -s * sn, -s * cs, c + s * (sn * centroid.x() + cs * centroid.y());
  canvas.transform = BevTransform(m);
  canvas.image = RgbImage(options.resolution, options.resolution, options.background);

  std::vector<double> zbuf(static_cast<std::size_t>(options.resolution) * options.resolution,
                           -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const Eigen::Vector2d px = canvas.transform.to_pixel(p.head<2>());
    const double fu = std::floor(px.x());
    const double fv = std::floor(px.y());
    if (fu < 0 || fv < 0 || fu >= options.resolution || fv >= options.resolution) continue;
    const int u = static_cast<int>(fu);
    const int v = static_cast<int>(fv);
    double& depth = zbuf[static_cast<std::size_t>(v) * options.resolution + u];
    if (p.z() <= depth) continue;
    depth = p.z();
    canvas.image.set(u, v, cloud.colors ? (*cloud.colors)[i] : options.uncolored_point);
  }
  return canvas;
}

double heading_rotation(const Heading2D& heading) {
  const Eigen::Vector2d& d = heading.direction();
  double deg = 90.0 - std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
  if (deg > 180.0) deg -= 360.0;
  if (deg <= -180.0) deg += 360.0;
  return deg;
}

int mark_radius_for(int resolution) {
  return std::max(8, static_cast<int>(std::lround(0.012 * resolution)));
}

Rgb mark_color(MarkId id) { return kPalette[id % kPalette.size()]; }

MarkStyle default_mark_style(int resolution) {
  MarkStyle style;
  style.radius_px = mark_radius_for(resolution);
  return style;
}

void draw_mark(RgbImage& image, MarkId id, double u, double v, const MarkStyle& style) {
  const double r = style.radius_px;
  const double outline = std::max(1.0, std::round(r / 8.0));
  fill_circle(image, u, v, r, style.fill);
  stroke_circle(image, u, v, r, outline, style.outline);
  const Rgb& f = style.fill;
  const double luma = 0.299 * f[0] + 0.587 * f[1] + 0.114 * f[2];
  const Rgb text = luma > 160.0 ? Rgb{0, 0, 0} : style.text;
  draw_number(image, id, u, v, static_cast<int>(std::lround(r * 1.2)), text);
}

void draw_marks(BevCanvas& canvas, const std::vector<ObjectInstance>& objects,
                const std::optional<std::set<MarkId>>& filter_ids) {
  std::vector<const ObjectInstance*> retained;
  if (filter_ids) {
    for (MarkId id : *filter_ids) {
      const auto it = std::find_if(objects.begin(), objects.end(), [id](const auto& o) { return o.mark_id == id; });
      if (it == objects.end()) throw Error(ErrorKind::kUnknownMarkId, "mark " + std::to_string(id) + " is not in the scene");
      retained.push_back(&*it);
    }
  } else {
    for (const auto& o : objects) retained.push_back(&o);
  }
  std::sort(retained.begin(), retained.end(), [](const auto* a, const auto* b) { return a->mark_id < b->mark_id; });

  MarkStyle style = default_mark_style(canvas.resolution);
  for (const ObjectInstance* obj : retained) {
    const Eigen::Vector2d px = canvas.transform.to_pixel(obj->obb.center.head<2>());
    style.fill = mark_color(obj->mark_id);
    draw_mark(canvas.image, obj->mark_id, px.x(), px.y(), style);
    canvas.marks.push_back({obj->mark_id, px.x(), px.y(), style.radius_px});
  }
}

nlohmann::json transform_sidecar(const BevCanvas& canvas) {
  const auto& m = canvas.transform.matrix();
  return {{"resolution", canvas.resolution},
          {"margin_px", canvas.margin_px},
          {"meters_per_pixel", canvas.meters_per_pixel},
          {"scale_px_per_m", 1.0 / canvas.meters_per_pixel},
          {"rotation_deg", canvas.rotation_deg},
          {"translation_px", {m(0, 2), m(1, 2)}},
          {"world_to_pixel", {{m(0, 0), m(0, 1), m(0, 2)}, {m(1, 0), m(1, 1), m(1, 2)}}}};
}

}  // namespace bevprompt
