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
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/geometry.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {

/// Generated categories come first; the last three are import-only.
enum class QaCategory {
  kCount,
  kRelDirection,
  kRelDistance,
  kAbsDistance,
  kObjSize,
  kRoomSize,
  kRoutePlan,
  kObjAttribute,
  kBinaryVerify,
  kLocalization,
};

std::string_view category_name(QaCategory category);
/// Accepts the names produced by category_name (e.g. "rel_direction").
QaCategory parse_category(std::string_view name);
bool is_generated(QaCategory category);
/// Categories answered from the BEV and metadata alone.
bool is_spatial_only(QaCategory category);
const std::vector<QaCategory>& generated_categories();
/// Column order used by evaluation reports.
const std::vector<QaCategory>& report_order();
std::string_view category_title(QaCategory category);

enum class AnswerKind { kNumeric, kChoice };
std::string_view answer_kind_name(AnswerKind kind);

struct NumericAnswer {
  double value = 0.0;
  std::string unit;

  bool operator==(const NumericAnswer&) const = default;
};

struct QAItem {
  std::string qa_id;
  std::string scene_id;
  QaCategory category = QaCategory::kCount;
  std::string question;
  AnswerKind answer_kind = AnswerKind::kNumeric;
  std::optional<NumericAnswer> numeric_answer;
  std::optional<std::vector<std::string>> choices;
  std::optional<std::size_t> correct_choice;
  std::vector<MarkId> involved_marks;
  /// Sampled entities, raw measurements and rule hits behind the answer.
  nlohmann::json trace = nlohmann::json::object();

  bool operator==(const QAItem&) const = default;
};

enum class NavAction { kGoForward, kTurnLeft, kTurnRight };
std::string_view action_text(NavAction action);
NavAction parse_action(std::string_view text);

struct RouteSpec {
  std::vector<MarkId> waypoints;
  MarkId facing_mark = 0;
  std::vector<NavAction> actions;
  double clearance_m = 0.25;
};

enum class DistanceMetric { kClosestCorner, kCenter };

struct QaOptions {
  /// Labels never used as question subjects or route obstacles.
  std::set<std::string> stoplist = {"wall", "floor", "ceiling", "object"};
  /// Minimum XY separation of a direction triplet; see separation_for_bev.
  double min_separation_m = 0.0;
  /// Draw the wanted direction bin before sampling triplets so gold labels are balanced.
  bool balance_directions = true;
  double rel_distance_margin_m = 0.15;
  DistanceMetric rel_distance_metric = DistanceMetric::kClosestCorner;
  double abs_distance_floor_m = 0.1;
  double turn_threshold_deg = 30.0;
  double route_clearance_m = 0.25;
  double route_min_spacing_m = 0.8;
  unsigned route_max_candidates = 15;
  unsigned route_max_attempts = 256;
  unsigned max_attempts = 64;
  double room_cell_m = 0.05;
  /// Reverse sampled routes before deriving actions (off by default).
  bool route_reversal = false;
};

/// Converts a minimum BEV pixel distance into meters for a given render scale.
double separation_for_bev(double meters_per_pixel, double min_pixels = 20.0);

/// mt19937_64 with distribution code kept local so sequences do not depend
/// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n).
  std::size_t index(std::size_t n);
  /// Uniform in [0, 1).
  double unit();
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Stable per-(scene, category, index) seed stream.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view scene_id, QaCategory category,
                          std::uint64_t index);

/// Labels that occur exactly once and are not stop-listed.
std::vector<const ObjectInstance*> unambiguous_objects(const SceneManifest& scene, const QaOptions& options);

QAItem gen_count(const SceneManifest& scene, const std::string& label, std::uint64_t seed);
QAItem gen_relative_direction(const SceneManifest& scene, DirectionScheme scheme, std::uint64_t seed,
                              const QaOptions& options = {});
QAItem gen_relative_distance(const SceneManifest& scene, unsigned n_candidates, std::uint64_t seed,
                             const QaOptions& options = {});
QAItem gen_absolute_distance(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options = {});
QAItem gen_object_size(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options = {});

/// Occupied-cell area (m^2) of an XY grid with square cells of `cell_m`.
double occupied_floor_area(const PointCloud& cloud, double cell_m);
/// `cloud` is the raw scene cloud; the ceiling is removed first.
QAItem gen_room_size(const SceneManifest& scene, const PointCloud& cloud, std::uint64_t seed,
                     const QaOptions& options = {});

RouteSpec sample_route(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options = {});
std::vector<NavAction> derive_actions(const RouteSpec& route, const SceneManifest& scene,
                                      double turn_threshold_deg = 30.0);
/// Reversed waypoint order with facing and actions recomputed.
RouteSpec reverse_route(const RouteSpec& route, const SceneManifest& scene, double turn_threshold_deg = 30.0);
/// Minimum clearance of the route's segments against every non-route,
/// non-stoplisted footprint (infinity when there are no obstacles).
double route_clearance(const RouteSpec& route, const SceneManifest& scene, const std::set<std::string>& stoplist);
QAItem gen_route_plan(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options = {});

/// Generic entry point used by batch generation. `cloud` is needed for ROOM_SIZE only.
QAItem generate_item(QaCategory category, const SceneManifest& scene, const PointCloud* cloud,
                     std::uint64_t base_seed, std::uint64_t index, const QaOptions& options = {},
                     DirectionScheme scheme = DirectionScheme::kFourWay);

/// Offline prompt for paraphrasing and long-form answer writing by an external LLM.
std::string emit_augmentation_stub(const QAItem& item);

/// Checks the item invariants; with a scene also checks involved marks exist.
void validate_item(const QAItem& item, const SceneManifest* scene = nullptr);

nlohmann::json qa_item_to_json(const QAItem& item);
QAItem qa_item_from_json(const nlohmann::json& doc);
/// One compact JSON document per line, sorted keys.
std::string serialize_shard(const std::vector<QAItem>& items);
void write_shard(const std::filesystem::path& path, const std::vector<QAItem>& items);
std::vector<QAItem> read_shard(const std::filesystem::path& path);
/// Reads an externally sourced shard and validates it against `scene`.
std::vector<QAItem> import_shard(const std::filesystem::path& path, const SceneManifest& scene);

}  // namespace bevprompt
