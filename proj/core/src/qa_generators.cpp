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

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <tuple>

#include "bevprompt/bev.hpp"
#include "bevprompt/errors.hpp"
#include "bevprompt/geometry.hpp"
#include "bevprompt/qa.hpp"
#include "qa_internal.hpp"

namespace bevprompt {

using detail::object_ref;
using detail::round_to;
using detail::tagged;

QAItem gen_count(const SceneManifest& scene, const std::string& label, std::uint64_t seed) {
  std::vector<MarkId> ids;
  for (const auto& obj : scene.objects) {
    if (obj.label == label) ids.push_back(obj.mark_id);
  }
  if (ids.empty()) throw Error(ErrorKind::kLabelAbsent, "no '" + label + "' in scene " + scene.scene_id);
  std::sort(ids.begin(), ids.end());
  QAItem item = detail::numeric_item(scene, QaCategory::kCount, seed,
                                     "How many " + label + "(s) are there in this room?",
                                     static_cast<double>(ids.size()), "count");
  item.involved_marks = ids;
  item.trace = {{"label", label}, {"instances", ids}};
  return item;
}

QAItem gen_relative_direction(const SceneManifest& scene, DirectionScheme scheme, std::uint64_t seed,
                              const QaOptions& options) {
  const auto pool = unambiguous_objects(scene, options);
  if (pool.size() < 3) {
    throw Error(ErrorKind::kNoValidTriplet, "scene " + scene.scene_id + " has fewer than 3 unambiguous objects");
  }
  const double min_sep = std::max(options.min_separation_m, kGeometryEpsilon);
  Rng rng(seed);
  const auto& labels = direction_labels(scheme);
  // The wanted bin is drawn first so gold labels stay balanced even though
  // room geometry favors "front"; the first valid triplet is the fallback.
  const std::optional<std::string_view> wanted =
      options.balance_directions ? std::optional<std::string_view>(labels[rng.index(labels.size())]) : std::nullopt;
  struct Triplet {
    const ObjectInstance* standing;
    const ObjectInstance* facing;
    const ObjectInstance* target;
    double angle;
    std::string_view label;
    unsigned attempt;
  };
  std::optional<Triplet> fallback;
  std::optional<Triplet> chosen;
  int rejected_separation = 0;
  int rejected_boundary = 0;
  for (unsigned attempt = 1; attempt <= options.max_attempts && !chosen; ++attempt) {
    const std::size_t a = rng.index(pool.size());
    std::size_t b = rng.index(pool.size() - 1);
    if (b >= a) ++b;
    std::size_t c = rng.index(pool.size() - 2);
    for (std::size_t taken : {std::min(a, b), std::max(a, b)}) {
      if (c >= taken) ++c;
    }
    const Eigen::Vector2d s = xy(pool[a]->obb.center);
    const Eigen::Vector2d f = xy(pool[b]->obb.center);
    const Eigen::Vector2d t = xy(pool[c]->obb.center);
    if ((f - s).norm() < min_sep || (t - s).norm() < min_sep || (t - f).norm() < min_sep) {
      ++rejected_separation;
      continue;
    }
    const double angle = signed_angle(f - s, t - s);
    std::string_view label;
    try {
      label = direction_bin(angle, scheme);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kAmbiguousAngle) throw;
      ++rejected_boundary;
      continue;
    }
    const Triplet found{pool[a], pool[b], pool[c], angle, label, attempt};
    if (!wanted || label == *wanted) {
      chosen = found;
    } else if (!fallback) {
      fallback = found;
    }
  }
  if (!chosen) chosen = fallback;
  if (chosen) {
    const ObjectInstance& standing = *chosen->standing;
    const ObjectInstance& facing = *chosen->facing;
    const ObjectInstance& target = *chosen->target;
    std::vector<std::string> choices(labels.begin(), labels.end());
    const auto correct =
        static_cast<std::size_t>(std::find(labels.begin(), labels.end(), chosen->label) - labels.begin());
    const std::string options_text =
        scheme == DirectionScheme::kFourWay ? "front, right, back, or left" : "front-left, front-right, back-left, or back-right";
    QAItem item = detail::choice_item(scene, QaCategory::kRelDirection, seed,
                                      "If I am standing by the " + tagged(standing) + " and facing the " +
                                          tagged(facing) + ", is the " + tagged(target) + " to my " + options_text + "?",
                                      std::move(choices), correct);
    item.involved_marks = {standing.mark_id, facing.mark_id, target.mark_id};
    item.trace = {{"standing", object_ref(standing)},
                  {"facing", object_ref(facing)},
                  {"target", object_ref(target)},
                  {"angle_deg", chosen->angle},
                  {"scheme", scheme_name(scheme)},
                  {"answer", chosen->label},
                  {"wanted_bin", wanted ? nlohmann::json(*wanted) : nlohmann::json(nullptr)},
                  {"attempts", chosen->attempt},
                  {"rejected_separation", rejected_separation},
                  {"rejected_boundary", rejected_boundary},
                  {"min_separation_m", min_sep}};
    return item;
  }
  throw Error(ErrorKind::kNoValidTriplet, "no valid triplet in " + std::to_string(options.max_attempts) + " attempts");
}

QAItem gen_relative_distance(const SceneManifest& scene, unsigned n_candidates, std::uint64_t seed,
                             const QaOptions& options) {
  if (n_candidates < 3 || n_candidates > 5) throw Error(ErrorKind::kValidation, "n_candidates must be 3..5");
  const auto pool = unambiguous_objects(scene, options);
  if (pool.empty()) throw Error(ErrorKind::kNoUnambiguousReference, "scene " + scene.scene_id + " has no unique labels");
  if (pool.size() - 1 < n_candidates) {
    throw Error(ErrorKind::kTooFewCandidates, std::to_string(pool.size() - 1) + " candidates available, " +
                                                  std::to_string(n_candidates) + " required");
  }
  const bool corners = options.rel_distance_metric == DistanceMetric::kClosestCorner;
  Rng rng(seed);
  int rejected_margin = 0;
  for (unsigned attempt = 1; attempt <= options.max_attempts; ++attempt) {
    const std::size_t r = rng.index(pool.size());
    const ObjectInstance& reference = *pool[r];
    std::vector<const ObjectInstance*> others;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i != r) others.push_back(pool[i]);
    }
    rng.shuffle(others);
    others.resize(n_candidates);

    std::vector<double> distances;
    for (const auto* cand : others) {
      distances.push_back(corners ? min_corner_distance(cand->obb, reference.obb) : center_distance(*cand, reference));
    }
    std::vector<double> sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    if (sorted[1] - sorted[0] < options.rel_distance_margin_m) {
      ++rejected_margin;
      continue;
    }
    const auto correct = static_cast<std::size_t>(std::min_element(distances.begin(), distances.end()) - distances.begin());
    std::vector<std::string> choices;
    std::string listed;
    nlohmann::json candidates = nlohmann::json::array();
    for (std::size_t i = 0; i < others.size(); ++i) {
      choices.push_back(others[i]->label);
      listed += (i == 0 ? "" : ", ") + tagged(*others[i]);
      nlohmann::json ref = object_ref(*others[i]);
      ref["distance_m"] = distances[i];
      candidates.push_back(ref);
    }
    QAItem item = detail::choice_item(scene, QaCategory::kRelDistance, seed,
                                      "Measuring from the closest point of each object, which of these objects (" +
                                          listed + ") is closest to the " + tagged(reference) + "?",
                                      std::move(choices), correct);
    item.involved_marks.push_back(reference.mark_id);
    for (const auto* cand : others) item.involved_marks.push_back(cand->mark_id);
    item.trace = {{"reference", object_ref(reference)},
                  {"candidates", candidates},
                  {"metric", corners ? "closest_corner" : "center"},
                  {"margin_m", options.rel_distance_margin_m},
                  {"attempts", attempt},
                  {"rejected_margin", rejected_margin}};
    return item;
  }
  throw Error(ErrorKind::kNoUnambiguousReference,
              "no reference/candidate set clears the " + std::to_string(options.rel_distance_margin_m) + " m margin");
}

QAItem gen_absolute_distance(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options) {
  const auto pool = unambiguous_objects(scene, options);
  if (pool.size() < 2) throw Error(ErrorKind::kNoValidPair, "scene " + scene.scene_id + " has fewer than 2 unique labels");
  Rng rng(seed);
  int rejected_floor = 0;
  for (unsigned attempt = 1; attempt <= options.max_attempts; ++attempt) {
    const std::size_t i = rng.index(pool.size());
    std::size_t j = rng.index(pool.size() - 1);
    if (j >= i) ++j;
    const ObjectInstance& a = *pool[i];
    const ObjectInstance& b = *pool[j];
    const double distance = min_corner_distance(a.obb, b.obb);
    if (distance < options.abs_distance_floor_m) {
      ++rejected_floor;
      continue;
    }
    QAItem item = detail::numeric_item(scene, QaCategory::kAbsDistance, seed,
                                       "Measuring from the closest point of each object, what is the distance between the " +
                                           tagged(a) + " and the " + tagged(b) + " (in meters)?",
                                       round_to(distance, 100.0), "m");
    item.involved_marks = {a.mark_id, b.mark_id};
    item.trace = {{"objects", {object_ref(a), object_ref(b)}},
                  {"distance_m", distance},
                  {"rounding_m", 0.01},
                  {"attempts", attempt},
                  {"rejected_floor", rejected_floor}};
    return item;
  }
  throw Error(ErrorKind::kNoValidPair, "no pair at least " + std::to_string(options.abs_distance_floor_m) + " m apart");
}

QAItem gen_object_size(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options) {
  const auto pool = unambiguous_objects(scene, options);
  if (pool.empty()) throw Error(ErrorKind::kNoUnambiguousObject, "scene " + scene.scene_id + " has no unique labels");
  Rng rng(seed);
  const ObjectInstance& obj = *pool[rng.index(pool.size())];
  const double longest_m = obj.obb.extents.maxCoeff();
  QAItem item = detail::numeric_item(scene, QaCategory::kObjSize, seed,
                                     "What is the length of the longest dimension (length, width, or height) of the " +
                                         tagged(obj) + ", measured in centimeters?",
                                     std::round(longest_m * 100.0), "cm");
  item.involved_marks = {obj.mark_id};
  item.trace = {{"object", object_ref(obj)},
                {"extents_m", {obj.obb.extents.x(), obj.obb.extents.y(), obj.obb.extents.z()}},
                {"longest_m", longest_m}};
  return item;
}

double occupied_floor_area(const PointCloud& cloud, double cell_m) {
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "room area of an empty cloud");
  if (!(cell_m > 0.0)) throw Error(ErrorKind::kValidation, "cell size must be > 0");
  std::set<std::pair<long long, long long>> cells;
  for (const auto& p : cloud.points) {
    cells.emplace(static_cast<long long>(std::floor(p.x() / cell_m)), static_cast<long long>(std::floor(p.y() / cell_m)));
  }
  return static_cast<double>(cells.size()) * cell_m * cell_m;
}

QAItem gen_room_size(const SceneManifest& scene, const PointCloud& cloud, std::uint64_t seed, const QaOptions& options) {
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "scene " + scene.scene_id + " has an empty cloud");
  const PointCloud floor_view = remove_ceiling(cloud);
  const double area = occupied_floor_area(floor_view, options.room_cell_m);
  QAItem item = detail::numeric_item(
      scene, QaCategory::kRoomSize, seed,
      "What is the size of this room (in square meters)? If multiple rooms are shown, estimate the size of the combined space.",
      round_to(area, 10.0), "m2");
  item.trace = {{"area_m2", area}, {"cell_m", options.room_cell_m}, {"points", floor_view.size()}, {"rounding_m2", 0.1}};
  return item;
}

}  // namespace bevprompt
