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
#include <cstdio>
#include <map>
#include <string>

#include "bevprompt/errors.hpp"
#include "bevprompt/qa.hpp"
#include "qa_internal.hpp"

namespace bevprompt {
namespace {

struct CategoryInfo {
  QaCategory category;
  std::string_view name;
  std::string_view title;
};

constexpr CategoryInfo kCategories[] = {
    {QaCategory::kCount, "count", "Obj. Count"},
    {QaCategory::kRelDirection, "rel_direction", "Rel. Dir."},
    {QaCategory::kRelDistance, "rel_distance", "Rel. Dist."},
    {QaCategory::kAbsDistance, "abs_distance", "Abs. Dist."},
    {QaCategory::kObjSize, "obj_size", "Obj. Size"},
    {QaCategory::kRoomSize, "room_size", "Room Size"},
    {QaCategory::kRoutePlan, "route_plan", "Route Plan"},
    {QaCategory::kObjAttribute, "obj_attribute", "Attribute"},
    {QaCategory::kBinaryVerify, "binary_verify", "Binary"},
    {QaCategory::kLocalization, "localization", "Localization"},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
}

}  // namespace

std::string_view category_name(QaCategory category) {
  for (const auto& info : kCategories) {
    if (info.category == category) return info.name;
  }
  return "unknown";
}

std::string_view category_title(QaCategory category) {
  for (const auto& info : kCategories) {
    if (info.category == category) return info.title;
  }
  return "?";
}

QaCategory parse_category(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& info : kCategories) {
    if (info.name == lower) return info.category;
  }
  throw Error(ErrorKind::kValidation, "unknown QA category '" + std::string(name) + "'");
}

bool is_generated(QaCategory category) {
  return category != QaCategory::kObjAttribute && category != QaCategory::kBinaryVerify &&
         category != QaCategory::kLocalization;
}

bool is_spatial_only(QaCategory category) { return is_generated(category); }

const std::vector<QaCategory>& generated_categories() {
  static const std::vector<QaCategory> all = {QaCategory::kCount,       QaCategory::kRelDirection,
                                              QaCategory::kRelDistance, QaCategory::kAbsDistance,
                                              QaCategory::kObjSize,     QaCategory::kRoomSize,
                                              QaCategory::kRoutePlan};
  return all;
}

const std::vector<QaCategory>& report_order() {
  static const std::vector<QaCategory> order = {
      QaCategory::kCount,        QaCategory::kAbsDistance,  QaCategory::kObjSize,      QaCategory::kRoomSize,
      QaCategory::kRelDistance,  QaCategory::kRelDirection, QaCategory::kRoutePlan,    QaCategory::kObjAttribute,
      QaCategory::kBinaryVerify, QaCategory::kLocalization};
  return order;
}

std::string_view answer_kind_name(AnswerKind kind) { return kind == AnswerKind::kNumeric ? "numeric" : "choice"; }

std::string_view action_text(NavAction action) {
  switch (action) {
    case NavAction::kGoForward: return "Go Forward";
    case NavAction::kTurnLeft: return "Turn Left";
    case NavAction::kTurnRight: return "Turn Right";
  }
  return "?";
}

NavAction parse_action(std::string_view text) {
  for (NavAction a : {NavAction::kGoForward, NavAction::kTurnLeft, NavAction::kTurnRight}) {
    if (action_text(a) == text) return a;
  }
  throw Error(ErrorKind::kValidation, "unknown navigation action '" + std::string(text) + "'");
}

double separation_for_bev(double meters_per_pixel, double min_pixels) {
  if (!(meters_per_pixel > 0.0)) throw Error(ErrorKind::kValidation, "meters_per_pixel must be > 0");
  return meters_per_pixel * min_pixels;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kValidation, "Rng::index(0)");
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return static_cast<std::size_t>(x % bound);
  }
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view scene_id, QaCategory category,
                          std::uint64_t index) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  fnv_mix(h, scene_id.data(), scene_id.size());
  const char sep = '\0';
  fnv_mix(h, &sep, 1);
  const std::string_view name = category_name(category);
  fnv_mix(h, name.data(), name.size());
  fnv_mix(h, &sep, 1);
  for (int i = 0; i < 8; ++i) {
    const auto b = static_cast<unsigned char>(index >> (8 * i));
    fnv_mix(h, &b, 1);
  }
  return splitmix64(h ^ splitmix64(base_seed));
}

std::vector<const ObjectInstance*> unambiguous_objects(const SceneManifest& scene, const QaOptions& options) {
  std::map<std::string, int> counts;
  for (const auto& obj : scene.objects) ++counts[obj.label];
  std::vector<const ObjectInstance*> out;
  for (const auto& obj : scene.objects) {
    if (counts[obj.label] == 1 && options.stoplist.count(obj.label) == 0) out.push_back(&obj);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->mark_id < b->mark_id; });
  return out;
}

void validate_item(const QAItem& item, const SceneManifest* scene) {
  auto bad = [&item](const std::string& what) {
    throw Error(ErrorKind::kValidation, "QA item '" + item.qa_id + "': " + what);
  };
  if (item.qa_id.empty()) bad("qa_id must be non-empty");
  if (item.question.empty()) bad("question must be non-empty");
  if (item.answer_kind == AnswerKind::kNumeric) {
    if (!item.numeric_answer) bad("numeric item lacks numeric_answer");
    if (item.choices || item.correct_choice) bad("numeric item must not carry choices");
    if (!std::isfinite(item.numeric_answer->value) || item.numeric_answer->value < 0.0) {
      bad("numeric answer must be finite and >= 0");
    }
  } else {
    if (item.numeric_answer) bad("choice item must not carry numeric_answer");
    if (!item.choices || item.choices->empty()) bad("choice item lacks choices");
    if (!item.correct_choice || *item.correct_choice >= item.choices->size()) bad("correct_choice out of range");
  }
  if (scene != nullptr) {
    if (!item.scene_id.empty() && item.scene_id != scene->scene_id) bad("belongs to scene '" + item.scene_id + "'");
    for (MarkId id : item.involved_marks) {
      if (scene->find(id) == nullptr) {
        throw Error(ErrorKind::kUnknownMarkId, "QA item '" + item.qa_id + "' references unknown mark " + std::to_string(id));
      }
    }
  }
}

namespace detail {

std::string default_qa_id(const SceneManifest& scene, QaCategory category, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(seed));
  return scene.scene_id + "-" + std::string(category_name(category)) + "-" + buf;
}

QAItem numeric_item(const SceneManifest& scene, QaCategory category, std::uint64_t seed, std::string question,
                    double value, std::string unit) {
  QAItem item;
  item.qa_id = default_qa_id(scene, category, seed);
  item.scene_id = scene.scene_id;
  item.category = category;
  item.question = std::move(question);
  item.answer_kind = AnswerKind::kNumeric;
  item.numeric_answer = NumericAnswer{value == 0.0 ? 0.0 : value, std::move(unit)};
  return item;
}

QAItem choice_item(const SceneManifest& scene, QaCategory category, std::uint64_t seed, std::string question,
                   std::vector<std::string> choices, std::size_t correct) {
  QAItem item;
  item.qa_id = default_qa_id(scene, category, seed);
  item.scene_id = scene.scene_id;
  item.category = category;
  item.question = std::move(question);
  item.answer_kind = AnswerKind::kChoice;
  item.choices = std::move(choices);
  item.correct_choice = correct;
  return item;
}

}  // namespace detail
}  // namespace bevprompt
