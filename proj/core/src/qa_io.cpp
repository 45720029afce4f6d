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
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "bevprompt/errors.hpp"
#include "bevprompt/qa.hpp"
#include "qa_internal.hpp"

namespace bevprompt {

nlohmann::json qa_item_to_json(const QAItem& item) {
  nlohmann::json doc;
  doc["qa_id"] = item.qa_id;
  doc["scene_id"] = item.scene_id;
  doc["category"] = category_name(item.category);
  doc["question"] = item.question;
  doc["answer_kind"] = answer_kind_name(item.answer_kind);
  doc["numeric_answer"] = item.numeric_answer
                              ? nlohmann::json{{"value", item.numeric_answer->value}, {"unit", item.numeric_answer->unit}}
                              : nlohmann::json(nullptr);
  doc["choices"] = item.choices ? nlohmann::json(*item.choices) : nlohmann::json(nullptr);
  doc["correct_choice"] = item.correct_choice ? nlohmann::json(*item.correct_choice) : nlohmann::json(nullptr);
  doc["involved_marks"] = item.involved_marks;
  doc["trace"] = item.trace;
  return doc;
}

QAItem qa_item_from_json(const nlohmann::json& doc) {
  try {
    QAItem item;
    item.qa_id = doc.at("qa_id").get<std::string>();
    item.scene_id = doc.at("scene_id").get<std::string>();
    item.category = parse_category(doc.at("category").get<std::string>());
    item.question = doc.at("question").get<std::string>();
    const auto kind = doc.at("answer_kind").get<std::string>();
    if (kind == "numeric") {
      item.answer_kind = AnswerKind::kNumeric;
    } else if (kind == "choice") {
      item.answer_kind = AnswerKind::kChoice;
    } else {
      throw Error(ErrorKind::kValidation, "answer_kind: unknown value '" + kind + "'");
    }
    if (auto it = doc.find("numeric_answer"); it != doc.end() && !it->is_null()) {
      item.numeric_answer = NumericAnswer{it->at("value").get<double>(), it->value("unit", std::string())};
    }
    if (auto it = doc.find("choices"); it != doc.end() && !it->is_null()) {
      item.choices = it->get<std::vector<std::string>>();
    }
    if (auto it = doc.find("correct_choice"); it != doc.end() && !it->is_null()) {
      item.correct_choice = it->get<std::size_t>();
    }
    item.involved_marks = doc.value("involved_marks", std::vector<MarkId>{});
    item.trace = doc.value("trace", nlohmann::json::object());
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("QA item: ") + e.what());
  }
}

std::string serialize_shard(const std::vector<QAItem>& items) {
  std::string out;
  for (const auto& item : items) {
    out += qa_item_to_json(item).dump();
    out += '\n';
  }
  return out;
}

void write_shard(const std::filesystem::path& path, const std::vector<QAItem>& items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << serialize_shard(items);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<QAItem> read_shard(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<QAItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    items.push_back(qa_item_from_json(doc));
  }
  return items;
}

std::vector<QAItem> import_shard(const std::filesystem::path& path, const SceneManifest& scene) {
  std::vector<QAItem> items = read_shard(path);
  for (std::size_t i = 0; i < items.size(); ++i) {
    QAItem& item = items[i];
    if (item.scene_id.empty()) item.scene_id = scene.scene_id;
    if (item.scene_id != scene.scene_id) {
      throw Error(ErrorKind::kValidation, "line " + std::to_string(i + 1) + ": scene_id '" + item.scene_id +
                                              "' does not match scene '" + scene.scene_id + "'");
    }
    try {
      validate_item(item, &scene);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(i + 1) + " (" + item.qa_id + "): " + e.what());
    }
  }
  return items;
}

QAItem generate_item(QaCategory category, const SceneManifest& scene, const PointCloud* cloud, std::uint64_t base_seed,
                     std::uint64_t index, const QaOptions& options, DirectionScheme scheme) {
  const std::uint64_t seed = derive_seed(base_seed, scene.scene_id, category, index);
  QAItem item;
  switch (category) {
    case QaCategory::kCount: {
      std::set<std::string> labels;
      for (const auto& obj : scene.objects) {
        if (options.stoplist.count(obj.label) == 0) labels.insert(obj.label);
      }
      if (labels.empty()) throw Error(ErrorKind::kLabelAbsent, "scene " + scene.scene_id + " has no countable labels");
      Rng rng(seed);
      auto it = labels.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng.index(labels.size())));
      item = gen_count(scene, *it, seed);
      break;
    }
    case QaCategory::kRelDirection:
      item = gen_relative_direction(scene, scheme, seed, options);
      break;
    case QaCategory::kRelDistance: {
      const auto pool = unambiguous_objects(scene, options);
      const std::size_t upper = pool.size() < 2 ? 3 : std::clamp<std::size_t>(pool.size() - 1, 3, 5);
      Rng rng(seed ^ 0x9E3779B97F4A7C15ull);
      const auto n = static_cast<unsigned>(3 + rng.index(upper - 2));
      item = gen_relative_distance(scene, n, seed, options);
      break;
    }
    case QaCategory::kAbsDistance:
      item = gen_absolute_distance(scene, seed, options);
      break;
    case QaCategory::kObjSize:
      item = gen_object_size(scene, seed, options);
      break;
    case QaCategory::kRoomSize:
      if (cloud == nullptr) throw Error(ErrorKind::kEmptyCloud, "room size needs the scene point cloud");
      item = gen_room_size(scene, *cloud, seed, options);
      break;
    case QaCategory::kRoutePlan:
      item = gen_route_plan(scene, seed, options);
      break;
    default:
      throw Error(ErrorKind::kValidation,
                  std::string(category_name(category)) + " items are imported, not generated");
  }
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "%04llu", static_cast<unsigned long long>(index));
  item.qa_id = scene.scene_id + "-" + std::string(category_name(category)) + "-" + suffix;
  item.trace["seed"] = seed;
  item.trace["index"] = index;
  return item;
}

namespace {

std::string gold_text(const QAItem& item) {
  if (item.answer_kind == AnswerKind::kNumeric && item.numeric_answer) {
    std::ostringstream os;
    os << item.numeric_answer->value;
    if (!item.numeric_answer->unit.empty() && item.numeric_answer->unit != "count") os << ' ' << item.numeric_answer->unit;
    return os.str();
  }
  if (item.choices && item.correct_choice && *item.correct_choice < item.choices->size()) {
    return (*item.choices)[*item.correct_choice];
  }
  return "(missing)";
}

std::string ref_text(const nlohmann::json& ref) {
  return ref.value("label", std::string("?")) + " [" + std::to_string(ref.value("mark_id", 0u)) + "]";
}

std::string category_facts(const QAItem& item) {
  const auto& t = item.trace;
  std::string out;
  switch (item.category) {
    case QaCategory::kCount:
      out += "Counted label: " + t.value("label", std::string()) + "\n";
      out += "Gold count: " + gold_text(item) + "\n";
      break;
    case QaCategory::kRelDirection:
      if (t.contains("standing")) {
        out += "Standing object: " + ref_text(t["standing"]) + "\n";
        out += "Facing object: " + ref_text(t["facing"]) + "\n";
        out += "Target object: " + ref_text(t["target"]) + "\n";
        out += "Signed angle (deg, clockwise positive): " + t["angle_deg"].dump() + "\n";
      }
      out += "Gold direction: " + gold_text(item) + "\n";
      break;
    case QaCategory::kRoutePlan:
      if (t.contains("waypoint_labels")) {
        out += "Waypoints:";
        for (const auto& ref : t["waypoint_labels"]) out += " " + ref_text(ref) + ";";
        out += "\nGold actions:";
        for (const auto& a : t["route"]["actions"]) out += " " + a.get<std::string>() + ";";
        out += "\nBlanked step: " + std::to_string(t.value("blank_index", 0) + 1) + "\n";
      }
      out += "Gold answer for the blank: " + gold_text(item) + "\n";
      break;
    default:
      out += "Gold answer: " + gold_text(item) + "\n";
      break;
  }
  return out;
}

}  // namespace

std::string emit_augmentation_stub(const QAItem& item) {
  std::string out;
  out += "You are helping build a spatial reasoning dataset for an indoor scene.\n";
  out += "Task category: " + std::string(category_title(item.category)) + " (" +
         std::string(category_name(item.category)) + ")\n";
  out += "Scene: " + item.scene_id + "\n";
  out += "QA id: " + item.qa_id + "\n\n";
  out += "Template question:\n" + item.question + "\n\n";
  if (item.choices) {
    out += "Options:";
    for (const auto& c : *item.choices) out += " " + c + ";";
    out += "\n";
  }
  out += category_facts(item);
  out += "\nGeneration record (JSON):\n" + item.trace.dump(2) + "\n\n";
  out += "Instructions:\n";
  out += "1. Write three alternative phrasings of the template question. Keep every object reference, including the "
         "bracketed mark ids, and do not change its meaning.\n";
  out += "2. Write a long-form answer that reasons step by step from the facts above and ends with the gold answer. "
         "Wrap the reasoning in <think></think> and the final answer in <answer></answer>.\n";
  out += "3. Do not introduce objects or measurements that are not listed above.\n";
  return out;
}

}  // namespace bevprompt
