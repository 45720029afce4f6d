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

#include "bevprompt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "bevprompt/image.hpp"

namespace bevprompt {
namespace {

constexpr double kRoomX = 6.0;
constexpr double kRoomY = 5.0;
constexpr double kRoomZ = 2.6;
const Rgb kFloorColor = {176, 156, 128};
const Rgb kWallColor = {214, 212, 204};
const Rgb kCeilingColor = {240, 240, 240};

Rgb label_color(const std::string& label) {
  static const std::vector<std::pair<std::string, Rgb>> table = {
      {"bed", {70, 110, 170}},   {"sofa", {150, 60, 60}},      {"table", {120, 80, 40}},
      {"chair", {200, 140, 40}}, {"tv", {30, 30, 30}},         {"lamp", {240, 220, 120}},
      {"fridge", {190, 200, 210}}, {"plant", {50, 140, 60}},   {"desk", {140, 100, 70}},
      {"bookshelf", {100, 70, 50}}, {"armchair", {120, 60, 130}}};
  for (const auto& [name, color] : table) {
    if (name == label) return color;
  }
  return {128, 128, 128};
}

ObjectInstance make_object(MarkId id, std::string label, Eigen::Vector3d center, Eigen::Vector3d extents,
                           double yaw_deg = 0.0) {
  ObjectInstance obj;
  obj.mark_id = id;
  obj.label = std::move(label);
  obj.obb.center = center;
  obj.obb.extents = extents;
  obj.obb.rotation = Eigen::AngleAxisd(yaw_deg * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return obj;
}

// Samples the five visible faces (top and sides) of a box.
void sample_box(const ObjectInstance& obj, double spacing, PointCloud& cloud) {
  const Eigen::Vector3d h = obj.obb.extents / 2.0;
  const Rgb color = label_color(obj.label);
  auto emit = [&](const Eigen::Vector3d& local) {
    cloud.points.push_back(obj.obb.center + obj.obb.rotation * local);
    cloud.colors->push_back(color);
  };
  auto steps = [spacing](double extent) { return std::max(1, static_cast<int>(std::ceil(extent / spacing))); };
  const int nx = steps(obj.obb.extents.x());
  const int ny = steps(obj.obb.extents.y());
  const int nz = steps(obj.obb.extents.z());
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) emit({-h.x() + 2 * h.x() * i / nx, -h.y() + 2 * h.y() * j / ny, h.z()});
  }
  for (int k = 0; k < nz; ++k) {
    const double z = -h.z() + 2 * h.z() * k / nz;
    for (int i = 0; i <= nx; ++i) {
      const double x = -h.x() + 2 * h.x() * i / nx;
      emit({x, -h.y(), z});
      emit({x, h.y(), z});
    }
    for (int j = 1; j < ny; ++j) {
      const double y = -h.y() + 2 * h.y() * j / ny;
      emit({-h.x(), y, z});
      emit({h.x(), y, z});
    }
  }
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Rgb color = {0, 0, 0};
  double shade = 1.0;
};

// Slab test in the box frame; reports the entry distance along the ray.
void intersect_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const ObjectInstance& obj, Hit& best) {
  const Eigen::Matrix3d rt = obj.obb.rotation.transpose();
  const Eigen::Vector3d o = rt * (origin - obj.obb.center);
  const Eigen::Vector3d d = rt * dir;
  const Eigen::Vector3d h = obj.obb.extents / 2.0;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis = 0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-12) {
      if (o[k] < -h[k] || o[k] > h[k]) return;
      continue;
    }
    double a = (-h[k] - o[k]) / d[k];
    double b = (h[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    if (a > t0) {
      t0 = a;
      axis = k;
    }
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t0 <= 1e-6 || t0 >= best.t) return;
  best.t = t0;
  best.color = label_color(obj.label);
  best.shade = axis == 2 ? 1.0 : (axis == 0 ? 0.8 : 0.65);
}

void intersect_room(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, Hit& best) {
  const double lo[3] = {0.0, 0.0, 0.0};
  const double hi[3] = {kRoomX, kRoomY, kRoomZ};
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir[k]) < 1e-12) continue;
    const double t = ((dir[k] > 0 ? hi[k] : lo[k]) - origin[k]) / dir[k];
    if (t <= 1e-6 || t >= best.t) continue;
    best.t = t;
    if (k == 2) {
      best.color = dir[k] > 0 ? kCeilingColor : kFloorColor;
      best.shade = 1.0;
    } else {
      best.color = kWallColor;
      best.shade = k == 0 ? 0.9 : 0.8;
    }
  }
}

Rgb shaded(Rgb c, double s) {
  return {static_cast<std::uint8_t>(std::lround(c[0] * s)), static_cast<std::uint8_t>(std::lround(c[1] * s)),
          static_cast<std::uint8_t>(std::lround(c[2] * s))};
}

std::string numbered(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, index, ext);
  return buf;
}

}  // namespace

std::vector<ObjectInstance> synthetic_objects() {
  return {
      make_object(1, "bed", {1.2, 3.8, 0.3}, {2.0, 1.6, 0.6}),
      make_object(2, "sofa", {4.6, 0.8, 0.4}, {2.0, 0.9, 0.8}),
      make_object(3, "table", {3.0, 2.5, 0.38}, {1.2, 0.8, 0.76}),
      make_object(4, "chair", {2.1, 2.5, 0.45}, {0.5, 0.5, 0.9}),
      make_object(5, "chair", {3.9, 2.5, 0.45}, {0.5, 0.5, 0.9}, 180.0),
      make_object(6, "tv", {5.85, 3.0, 1.2}, {0.1, 1.2, 0.7}),
      make_object(7, "lamp", {0.4, 0.4, 0.8}, {0.3, 0.3, 1.6}),
      make_object(8, "fridge", {5.6, 4.6, 0.9}, {0.7, 0.7, 1.8}),
      make_object(9, "plant", {0.4, 2.2, 0.5}, {0.4, 0.4, 1.0}),
      make_object(10, "desk", {2.6, 0.4, 0.375}, {1.4, 0.6, 0.75}),
      make_object(11, "bookshelf", {3.9, 4.8, 1.0}, {1.0, 0.35, 2.0}),
      make_object(12, "armchair", {1.2, 1.3, 0.4}, {0.7, 0.7, 0.8}, 30.0),
  };
}

PointCloud synthetic_cloud(const std::vector<ObjectInstance>& objects, double spacing) {
  PointCloud cloud;
  cloud.colors.emplace();
  const int nx = static_cast<int>(std::lround(kRoomX / spacing));
  const int ny = static_cast<int>(std::lround(kRoomY / spacing));
  const int nz = static_cast<int>(std::lround(kRoomZ / spacing));
  auto push = [&cloud](double x, double y, double z, Rgb c) {
    cloud.points.emplace_back(x, y, z);
    cloud.colors->push_back(c);
  };
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      push(i * spacing, j * spacing, 0.0, kFloorColor);
      push(i * spacing, j * spacing, kRoomZ, kCeilingColor);
    }
  }
  for (int k = 1; k < nz; ++k) {
    const double z = k * spacing;
    for (int i = 0; i <= nx; ++i) {
      push(i * spacing, 0.0, z, kWallColor);
      push(i * spacing, kRoomY, z, kWallColor);
    }
    for (int j = 1; j < ny; ++j) {
      push(0.0, j * spacing, z, kWallColor);
      push(kRoomX, j * spacing, z, kWallColor);
    }
  }
  for (const auto& obj : objects) sample_box(obj, spacing, cloud);
  return cloud;
}

SceneManifest write_synthetic_scene(const std::filesystem::path& dir, const SyntheticOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  SceneManifest scene;
  scene.scene_id = options.scene_id;
  scene.objects = synthetic_objects();
  scene.depth_scale = 0.001;
  scene.cloud_path = dir / "cloud.ply";
  save_point_cloud(scene.cloud_path, synthetic_cloud(scene.objects, options.point_spacing_m),
                   PlyEncoding::kBinaryLittleEndian, PlyScalar::kFloat32);

  // Cameras ride an ellipse near the walls and look at a point above the
  // room center, so each object is seen from several sides.
  const Eigen::Vector3d look_at(kRoomX / 2.0, kRoomY / 2.0, 0.5);
  const Intrinsics intrinsics{options.width * 0.6875, options.width * 0.6875, options.width / 2.0, options.height / 2.0};
  for (int f = 0; f < options.frame_count; ++f) {
    const double yaw = 2.0 * std::numbers::pi * f / options.frame_count;
    const Eigen::Vector3d position(kRoomX / 2.0 + 2.1 * std::cos(yaw), kRoomY / 2.0 + 1.7 * std::sin(yaw), 1.6);
    const Eigen::Vector3d forward = (look_at - position).normalized();
    const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Eigen::Matrix3d rotation;
    rotation.col(0) = right;
    rotation.col(1) = down;
    rotation.col(2) = forward;

    FrameRecord frame;
    frame.frame_index = static_cast<std::uint32_t>(f * 10);
    frame.rgb_path = dir / "frames" / numbered("rgb", f, "png");
    frame.depth_path = dir / "frames" / numbered("depth", f, "png");
    frame.intrinsics = intrinsics;
    frame.extrinsic.setIdentity();
    frame.extrinsic.topLeftCorner<3, 3>() = rotation;
    frame.extrinsic.topRightCorner<3, 1>() = position;
    frame.width = options.width;
    frame.height = options.height;

    RgbImage rgb(options.width, options.height);
    Gray16Image depth{options.width, options.height,
                      std::vector<std::uint16_t>(static_cast<std::size_t>(options.width) * options.height, 0)};
    for (int v = 0; v < options.height; ++v) {
      for (int u = 0; u < options.width; ++u) {
        const Eigen::Vector3d ray_cam((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
        const Eigen::Vector3d dir = rotation * ray_cam;
        Hit hit;
        intersect_room(position, dir, hit);
        for (const auto& obj : scene.objects) intersect_box(position, dir, obj, hit);
        rgb.set(u, v, shaded(hit.color, hit.shade));
        // ray_cam has unit z, so the hit parameter is the camera-space depth.
        const long raw = std::lround(hit.t / scene.depth_scale);
        depth.values[static_cast<std::size_t>(v) * options.width + u] =
            static_cast<std::uint16_t>(std::clamp<long>(raw, 0, 65535));
      }
    }
    write_png(frame.rgb_path, rgb);
    write_png_gray16(frame.depth_path, depth);
    scene.frames.push_back(std::move(frame));
  }
  save_manifest(dir / "manifest.json", scene);
  return load_manifest(dir / "manifest.json");
}

}  // namespace bevprompt
