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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bevprompt/image.hpp"

namespace bevprompt {

using MarkId = std::uint32_t;

/// Box with full side lengths `extents`, rotated box-to-world by `rotation`.
struct OrientedBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d extents = Eigen::Vector3d::Ones();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  bool operator==(const OrientedBox& other) const {
    return center == other.center && extents == other.extents && rotation == other.rotation;
  }
};

struct ObjectInstance {
  MarkId mark_id = 0;
  std::string label;
  OrientedBox obb;

  bool operator==(const ObjectInstance&) const = default;
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  bool operator==(const Intrinsics&) const = default;
};

/// One posed RGB-D frame. `extrinsic` maps camera coordinates (x right,
/// y down, z forward) to world coordinates.
struct FrameRecord {
  std::uint32_t frame_index = 0;
  std::filesystem::path rgb_path;
  std::filesystem::path depth_path;
  Intrinsics intrinsics;
  Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
  int width = 0;
  int height = 0;

  bool operator==(const FrameRecord& other) const {
    return frame_index == other.frame_index && rgb_path == other.rgb_path &&
           depth_path == other.depth_path && intrinsics == other.intrinsics &&
           extrinsic == other.extrinsic && width == other.width && height == other.height;
  }
};

/// Scene record in the canonical Z-up world frame.
struct SceneManifest {
  std::string scene_id;
  std::filesystem::path cloud_path;
  std::vector<ObjectInstance> objects;
  std::vector<FrameRecord> frames;
  double depth_scale = 0.001;

  bool operator==(const SceneManifest&) const = default;

  const ObjectInstance* find(MarkId id) const;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::optional<std::vector<Rgb>> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct ManifestOptions {
  /// Reject unknown keys instead of warning about them.
  bool strict = false;
  /// Verify that every referenced file exists.
  bool check_paths = true;
  /// Receives non-fatal warnings. Defaults to stderr when empty.
  std::function<void(const std::string&)> warn;
};

/// Loads and validates a scene manifest. Relative paths resolve against the
/// manifest's directory.
SceneManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});
SceneManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                             const ManifestOptions& options = {});

/// Serializes with paths written relative to `base_dir` where possible.
nlohmann::json manifest_to_json(const SceneManifest& manifest, const std::filesystem::path& base_dir);
void save_manifest(const std::filesystem::path& path, const SceneManifest& manifest);

/// Throws ValidationError naming the first violated field.
void validate_manifest(const SceneManifest& manifest);
void validate_box(const OrientedBox& box, const std::string& where);

enum class PlyEncoding { kAscii, kBinaryLittleEndian };
enum class PlyScalar { kFloat32, kFloat64 };

PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud, PlyEncoding encoding,
                      PlyScalar scalar = PlyScalar::kFloat64);

/// Reads the frame's 16-bit depth PNG and scales it to meters. Raw zeros stay 0.
DepthImage load_depth(const FrameRecord& frame, double depth_scale);
DepthImage depth_from_raw(const Gray16Image& raw, const FrameRecord& frame, double depth_scale);

}  // namespace bevprompt
