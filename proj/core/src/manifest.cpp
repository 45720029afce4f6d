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

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "bevprompt/errors.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kOrthonormalTolerance = 1e-6;

const std::set<std::string> kTopKeys = {"format", "scene_id", "cloud", "depth_scale", "up_axis", "objects", "frames"};
const std::set<std::string> kObjectKeys = {"mark_id", "label", "center", "extents", "rotation"};
const std::set<std::string> kFrameKeys = {"frame_index", "rgb", "depth", "width", "height", "intrinsics", "extrinsic"};
const std::set<std::string> kIntrinsicKeys = {"fx", "fy", "cx", "cy"};

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kValidation, field + ": " + what);
}

class Reader {
 public:
  explicit Reader(const ManifestOptions& options) : options_(options) {}

  void check_keys(const json& obj, const std::set<std::string>& known, const std::string& where) const {
    for (const auto& [key, value] : obj.items()) {
      if (known.count(key) != 0) continue;
      const std::string message = where + ": unknown key '" + key + "'";
      if (options_.strict) throw Error(ErrorKind::kValidation, message);
      if (options_.warn) {
        options_.warn(message);
      } else {
        std::cerr << "warning: " << message << '\n';
      }
    }
  }

 private:
  const ManifestOptions& options_;
};

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) invalid(where + "." + key, "missing");
  return *it;
}

double number(const json& value, const std::string& field) {
  if (!value.is_number()) invalid(field, "expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) invalid(field, "must be finite");
  return v;
}

std::string text(const json& value, const std::string& field) {
  if (!value.is_string()) invalid(field, "expected a string");
  return value.get<std::string>();
}

std::uint64_t unsigned_int(const json& value, const std::string& field) {
  if (!value.is_number_integer() || (value.is_number_integer() && value.get<std::int64_t>() < 0)) {
    invalid(field, "expected a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

Eigen::Vector3d vec3(const json& value, const std::string& field) {
  if (!value.is_array() || value.size() != 3) invalid(field, "expected an array of 3 numbers");
  return {number(value[0], field + "[0]"), number(value[1], field + "[1]"), number(value[2], field + "[2]")};
}

template <int N>
Eigen::Matrix<double, N, N> matrix(const json& value, const std::string& field) {
  if (!value.is_array() || value.size() != N) invalid(field, "expected " + std::to_string(N) + " rows");
  Eigen::Matrix<double, N, N> m;
  for (int r = 0; r < N; ++r) {
    const json& row = value[r];
    if (!row.is_array() || row.size() != N) invalid(field, "row " + std::to_string(r) + " must have " + std::to_string(N) + " entries");
    for (int c = 0; c < N; ++c) m(r, c) = number(row[c], field);
  }
  return m;
}

fs::path resolve(const fs::path& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = base_dir / p;
  return p.lexically_normal();
}

json path_json(const fs::path& p, const fs::path& base_dir) {
  if (base_dir.empty()) return p.generic_string();
  fs::path rel = fs::absolute(p).lexically_normal().lexically_relative(base_dir);
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

template <int N>
json matrix_json(const Eigen::Matrix<double, N, N>& m) {
  json rows = json::array();
  for (int r = 0; r < N; ++r) {
    json row = json::array();
    for (int c = 0; c < N; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

void check_rotation(const Eigen::Matrix3d& r, const std::string& field) {
  const double ortho = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthonormalTolerance) invalid(field, "not orthonormal (max |R*R^T - I| = " + std::to_string(ortho) + ")");
  if (std::abs(r.determinant() - 1.0) > kOrthonormalTolerance) invalid(field, "determinant must be +1");
}

}  // namespace

const ObjectInstance* SceneManifest::find(MarkId id) const {
  for (const auto& obj : objects) {
    if (obj.mark_id == id) return &obj;
  }
  return nullptr;
}

void validate_box(const OrientedBox& box, const std::string& where) {
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(box.center[k])) invalid(where + ".center", "must be finite");
    if (!(box.extents[k] > 0.0) || !std::isfinite(box.extents[k])) invalid(where + ".extents", "components must be > 0");
  }
  check_rotation(box.rotation, where + ".rotation");
}

void validate_manifest(const SceneManifest& m) {
  if (m.scene_id.empty()) invalid("scene_id", "must be non-empty");
  if (!(m.depth_scale > 0.0) || !std::isfinite(m.depth_scale)) invalid("depth_scale", "must be > 0");
  if (m.objects.empty()) invalid("objects", "at least one object is required");
  if (m.frames.empty()) invalid("frames", "at least one frame is required");
  std::set<MarkId> ids;
  for (std::size_t i = 0; i < m.objects.size(); ++i) {
    const auto& obj = m.objects[i];
    const std::string where = "objects[" + std::to_string(i) + "]";
    if (obj.mark_id < 1) invalid(where + ".mark_id", "must be >= 1");
    if (!ids.insert(obj.mark_id).second) invalid(where + ".mark_id", "duplicate mark_id " + std::to_string(obj.mark_id));
    if (obj.label.empty()) invalid(where + ".label", "must be non-empty");
    validate_box(obj.obb, where);
  }
  std::set<std::uint32_t> frame_ids;
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const auto& f = m.frames[i];
    const std::string where = "frames[" + std::to_string(i) + "]";
    if (!frame_ids.insert(f.frame_index).second) invalid(where + ".frame_index", "duplicate frame_index " + std::to_string(f.frame_index));
    if (!(f.intrinsics.fx > 0.0) || !(f.intrinsics.fy > 0.0)) invalid(where + ".intrinsics", "fx and fy must be > 0");
    if (f.width <= 0 || f.height <= 0) invalid(where + ".width/height", "must be > 0");
    check_rotation(f.extrinsic.topLeftCorner<3, 3>(), where + ".extrinsic");
    const Eigen::RowVector4d last = f.extrinsic.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kOrthonormalTolerance) {
      invalid(where + ".extrinsic", "last row must be (0, 0, 0, 1)");
    }
  }
}

SceneManifest parse_manifest(const json& doc, const fs::path& base_dir, const ManifestOptions& options) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "manifest must be a JSON object");
  Reader reader(options);
  reader.check_keys(doc, kTopKeys, "manifest");

  SceneManifest m;
  m.scene_id = text(require(doc, "scene_id", "manifest"), "scene_id");
  m.cloud_path = resolve(base_dir, text(require(doc, "cloud", "manifest"), "cloud"));
  if (auto it = doc.find("depth_scale"); it != doc.end()) m.depth_scale = number(*it, "depth_scale");
  if (auto it = doc.find("up_axis"); it != doc.end()) {
    const std::string axis = text(*it, "up_axis");
    if (axis != "Z" && axis != "z") invalid("up_axis", "only Z-up scenes are accepted; convert '" + axis + "' sources first");
  }

  const json& objects = require(doc, "objects", "manifest");
  if (!objects.is_array()) invalid("objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = "objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    if (!o.is_object()) invalid(where, "expected an object");
    reader.check_keys(o, kObjectKeys, where);
    ObjectInstance obj;
    const std::uint64_t id = unsigned_int(require(o, "mark_id", where), where + ".mark_id");
    if (id > 0xFFFFFFFFull) invalid(where + ".mark_id", "out of range");
    obj.mark_id = static_cast<MarkId>(id);
    obj.label = text(require(o, "label", where), where + ".label");
    obj.obb.center = vec3(require(o, "center", where), where + ".center");
    obj.obb.extents = vec3(require(o, "extents", where), where + ".extents");
    if (auto it = o.find("rotation"); it != o.end()) obj.obb.rotation = matrix<3>(*it, where + ".rotation");
    m.objects.push_back(std::move(obj));
  }

  const json& frames = require(doc, "frames", "manifest");
  if (!frames.is_array()) invalid("frames", "expected an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string where = "frames[" + std::to_string(i) + "]";
    const json& f = frames[i];
    if (!f.is_object()) invalid(where, "expected an object");
    reader.check_keys(f, kFrameKeys, where);
    FrameRecord frame;
    const std::uint64_t index = unsigned_int(require(f, "frame_index", where), where + ".frame_index");
    if (index > 0xFFFFFFFFull) invalid(where + ".frame_index", "out of range");
    frame.frame_index = static_cast<std::uint32_t>(index);
    frame.rgb_path = resolve(base_dir, text(require(f, "rgb", where), where + ".rgb"));
    frame.depth_path = resolve(base_dir, text(require(f, "depth", where), where + ".depth"));
    frame.width = static_cast<int>(unsigned_int(require(f, "width", where), where + ".width"));
    frame.height = static_cast<int>(unsigned_int(require(f, "height", where), where + ".height"));
    const json& k = require(f, "intrinsics", where);
    if (!k.is_object()) invalid(where + ".intrinsics", "expected an object");
    reader.check_keys(k, kIntrinsicKeys, where + ".intrinsics");
    frame.intrinsics.fx = number(require(k, "fx", where + ".intrinsics"), where + ".intrinsics.fx");
    frame.intrinsics.fy = number(require(k, "fy", where + ".intrinsics"), where + ".intrinsics.fy");
    frame.intrinsics.cx = number(require(k, "cx", where + ".intrinsics"), where + ".intrinsics.cx");
    frame.intrinsics.cy = number(require(k, "cy", where + ".intrinsics"), where + ".intrinsics.cy");
    frame.extrinsic = matrix<4>(require(f, "extrinsic", where), where + ".extrinsic");
    m.frames.push_back(std::move(frame));
  }

  validate_manifest(m);

  if (options.check_paths) {
    auto must_exist = [](const fs::path& p, const std::string& field) {
      std::error_code ec;
      if (!fs::is_regular_file(p, ec)) throw Error(ErrorKind::kIo, field + ": file not found: " + p.string());
    };
    must_exist(m.cloud_path, "cloud");
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
      must_exist(m.frames[i].rgb_path, "frames[" + std::to_string(i) + "].rgb");
      must_exist(m.frames[i].depth_path, "frames[" + std::to_string(i) + "].depth");
    }
  }
  return m;
}

SceneManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return parse_manifest(doc, fs::absolute(path).lexically_normal().parent_path(), options);
}

json manifest_to_json(const SceneManifest& m, const fs::path& base_dir) {
  json doc;
  doc["format"] = "bevprompt-scene/1";
  doc["scene_id"] = m.scene_id;
  doc["cloud"] = path_json(m.cloud_path, base_dir);
  doc["depth_scale"] = m.depth_scale;
  doc["up_axis"] = "Z";
  json objects = json::array();
  for (const auto& obj : m.objects) {
    objects.push_back({{"mark_id", obj.mark_id},
                       {"label", obj.label},
                       {"center", {obj.obb.center.x(), obj.obb.center.y(), obj.obb.center.z()}},
                       {"extents", {obj.obb.extents.x(), obj.obb.extents.y(), obj.obb.extents.z()}},
                       {"rotation", matrix_json<3>(obj.obb.rotation)}});
  }
  doc["objects"] = std::move(objects);
  json frames = json::array();
  for (const auto& f : m.frames) {
    frames.push_back({{"frame_index", f.frame_index},
                      {"rgb", path_json(f.rgb_path, base_dir)},
                      {"depth", path_json(f.depth_path, base_dir)},
                      {"width", f.width},
                      {"height", f.height},
                      {"intrinsics", {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy}, {"cx", f.intrinsics.cx}, {"cy", f.intrinsics.cy}}},
                      {"extrinsic", matrix_json<4>(f.extrinsic)}});
  }
  doc["frames"] = std::move(frames);
  return doc;
}

void save_manifest(const fs::path& path, const SceneManifest& manifest) {
  const json doc = manifest_to_json(manifest, fs::absolute(path).lexically_normal().parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace bevprompt
