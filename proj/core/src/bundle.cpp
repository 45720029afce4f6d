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
#include <cstdio>
#include <string>

#include "bevprompt/bundle.hpp"
#include "bevprompt/errors.hpp"

namespace bevprompt {
namespace {

std::string fixed2(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  std::string out(buf);
  if (out == "-0.00") out = "0.00";
  return out;
}

constexpr std::string_view kDirectionGuide =
    "Guide (guide-v1):\n"
    "1. Find the standing mark and the facing mark named in the question.\n"
    "2. The bird's-eye view is rotated so that the direction from the standing mark to the facing mark points "
    "straight up in the image. Up is your front, down is your back, image right is your right and image left is "
    "your left.\n"
    "3. Compare the target mark's horizontal and vertical offsets from the standing mark.\n"
    "4. Pick the direction bin that contains the target. The bins are split at 45 degrees around each axis for "
    "front/right/back/left and at the axes themselves for the four diagonal bins.";

constexpr std::string_view kRouteGuide =
    "Guide (guide-v1):\n"
    "1. Start at the first object of the route, facing the object named as your initial facing target.\n"
    "2. Simulate the route one step at a time. At each object, compare your current heading with the direction to "
    "the next object.\n"
    "3. If the next object is within 30 degrees of straight ahead the action is Go Forward. If it lies further to "
    "your right the action is Turn Right, and further to your left it is Turn Left.\n"
    "4. After each step your heading becomes the direction you just walked.\n"
    "5. Answer with the action of the hidden step.";

bool needs_keyframes(QaCategory category) { return !is_generated(category); }

}  // namespace

std::string_view image_role_name(ImageRole role) { return role == ImageRole::kBev ? "bev" : "keyframe_grid"; }

std::string_view answer_format_name(AnswerFormat format) {
  return format == AnswerFormat::kThinkThenAnswer ? "think_then_answer" : "short_answer";
}

std::string build_metadata_text(const std::vector<ObjectInstance>& objects, const std::set<MarkId>& filter_ids) {
  std::string out;
  for (MarkId id : filter_ids) {
    auto it = std::find_if(objects.begin(), objects.end(), [id](const ObjectInstance& o) { return o.mark_id == id; });
    if (it == objects.end()) throw Error(ErrorKind::kUnknownMarkId, "metadata requested for unknown mark " + std::to_string(id));
    const auto& c = it->obb.center;
    if (!out.empty()) out += '\n';
    out += "mark " + std::to_string(id) + ": " + it->label + ", center=(" + fixed2(c.x()) + ", " + fixed2(c.y()) + ", " +
           fixed2(c.z()) + ") m";
  }
  return out;
}

std::optional<std::string> build_guide_prompt(QaCategory category) {
  if (category == QaCategory::kRelDirection) return std::string(kDirectionGuide);
  if (category == QaCategory::kRoutePlan) return std::string(kRouteGuide);
  return std::nullopt;
}

AnswerFormat answer_format_for(QaCategory category) {
  return category == QaCategory::kRelDirection || category == QaCategory::kRoutePlan ? AnswerFormat::kThinkThenAnswer
                                                                                      : AnswerFormat::kShortAnswer;
}

std::string answer_instruction(AnswerFormat format, AnswerKind kind) {
  const std::string what = kind == AnswerKind::kChoice ? "the letter of the correct option"
                                                       : "a single number in the unit the question asks for";
  if (format == AnswerFormat::kThinkThenAnswer) {
    return "Think through the problem step by step between <think> and </think>, then give " + what +
           " between <answer> and </answer>.";
  }
  return "Reply with " + what + " between <answer> and </answer>, without explanation.";
}

std::string full_question_text(const QAItem& item) {
  std::string out = item.question;
  if (item.answer_kind == AnswerKind::kChoice && item.choices) {
    out += "\nOptions:";
    for (std::size_t i = 0; i < item.choices->size(); ++i) {
      out += "\n";
      out += static_cast<char>('A' + i);
      out += ". " + (*item.choices)[i];
    }
  }
  return out;
}

std::set<MarkId> bundle_marks(const QAItem& item, const SceneManifest& scene, const BundleOptions& options) {
  std::set<MarkId> marks;
  if (options.filter_marks) {
    marks.insert(item.involved_marks.begin(), item.involved_marks.end());
  } else {
    for (const auto& obj : scene.objects) marks.insert(obj.mark_id);
  }
  for (MarkId id : marks) {
    if (scene.find(id) == nullptr) throw Error(ErrorKind::kUnknownMarkId, "item " + item.qa_id + " names unknown mark " + std::to_string(id));
  }
  return marks;
}

double bundle_rotation(const QAItem& item, const SceneManifest& scene, const BundleOptions& options) {
  if (!options.rotation || item.category != QaCategory::kRelDirection || item.involved_marks.size() < 2) return 0.0;
  const ObjectInstance* standing = scene.find(item.involved_marks[0]);
  const ObjectInstance* facing = scene.find(item.involved_marks[1]);
  if (standing == nullptr || facing == nullptr) {
    throw Error(ErrorKind::kUnknownMarkId, "item " + item.qa_id + " names an unknown standing or facing mark");
  }
  const Eigen::Vector2d origin = xy(standing->obb.center);
  return heading_rotation(Heading2D(origin, xy(facing->obb.center) - origin));
}

BevCanvas render_item_bev(const PointCloud& cloud, const QAItem& item, const SceneManifest& scene,
                          const BundleOptions& options, const BevOptions& bev_options) {
  BevCanvas canvas = render_bev(cloud, bundle_rotation(item, scene, options), bev_options);
  draw_marks(canvas, scene.objects, bundle_marks(item, scene, options));
  return canvas;
}

PromptBundle assemble_bundle(const QAItem& item, const SceneArtifacts& artifacts, const BundleOptions& options) {
  if (artifacts.scene == nullptr) throw Error(ErrorKind::kMissingArtifact, "item " + item.qa_id + ": no scene supplied");
  const SceneManifest& scene = *artifacts.scene;
  const std::string where = "scene " + scene.scene_id + ", item " + item.qa_id;
  if (artifacts.bev == nullptr || artifacts.bev_image.empty()) {
    throw Error(ErrorKind::kMissingArtifact, where + ": BEV image has not been rendered");
  }
  if (!std::filesystem::exists(artifacts.root / artifacts.bev_image)) {
    throw Error(ErrorKind::kMissingArtifact, where + ": BEV image " + (artifacts.root / artifacts.bev_image).string() + " not found");
  }

  PromptBundle bundle;
  bundle.qa_id = item.qa_id;
  bundle.category = item.category;
  bundle.images.push_back({ImageRole::kBev, artifacts.bev_image});
  if (needs_keyframes(item.category)) {
    for (const auto& grid : artifacts.keyframe_grids) {
      if (!std::filesystem::exists(artifacts.root / grid)) {
        throw Error(ErrorKind::kMissingArtifact, where + ": keyframe grid " + grid.string() + " not found");
      }
      bundle.images.push_back({ImageRole::kKeyframeGrid, grid});
    }
  }

  for (const auto& mark : artifacts.bev->marks) bundle.drawn_marks.push_back(mark.mark_id);
  std::sort(bundle.drawn_marks.begin(), bundle.drawn_marks.end());
  const std::set<MarkId> marks = bundle_marks(item, scene, options);
  for (MarkId id : marks) {
    if (!std::binary_search(bundle.drawn_marks.begin(), bundle.drawn_marks.end(), id)) {
      throw Error(ErrorKind::kValidation, where + ": mark " + std::to_string(id) + " is described but not drawn on the BEV");
    }
  }
  if (options.metadata) bundle.metadata_text = build_metadata_text(scene.objects, marks);
  if (options.guide) bundle.guide_text = build_guide_prompt(item.category);
  bundle.question_text = full_question_text(item);
  bundle.answer_format = answer_format_for(item.category);
  bundle.answer_instruction = answer_instruction(bundle.answer_format, item.answer_kind);
  bundle.transform_sidecar = transform_sidecar(*artifacts.bev);
  return bundle;
}

nlohmann::json bundle_to_json(const PromptBundle& bundle) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : bundle.images) {
    images.push_back({{"role", image_role_name(img.role)}, {"path", img.path.generic_string()}});
  }
  return {{"qa_id", bundle.qa_id},
          {"category", category_name(bundle.category)},
          {"images", images},
          {"metadata_text", bundle.metadata_text},
          {"guide_text", bundle.guide_text ? nlohmann::json(*bundle.guide_text) : nlohmann::json(nullptr)},
          {"guide_version", bundle.guide_text ? nlohmann::json(kGuidePromptVersion) : nlohmann::json(nullptr)},
          {"question_text", bundle.question_text},
          {"answer_format", answer_format_name(bundle.answer_format)},
          {"answer_instruction", bundle.answer_instruction},
          {"transform_sidecar", bundle.transform_sidecar},
          {"drawn_marks", bundle.drawn_marks}};
}

PromptBundle bundle_from_json(const nlohmann::json& doc) {
  try {
    PromptBundle bundle;
    bundle.qa_id = doc.at("qa_id").get<std::string>();
    bundle.category = parse_category(doc.at("category").get<std::string>());
    for (const auto& img : doc.at("images")) {
      const auto role = img.at("role").get<std::string>();
      if (role != "bev" && role != "keyframe_grid") throw Error(ErrorKind::kParse, "bundle image role '" + role + "'");
      bundle.images.push_back({role == "bev" ? ImageRole::kBev : ImageRole::kKeyframeGrid,
                               std::filesystem::path(img.at("path").get<std::string>())});
    }
    bundle.metadata_text = doc.value("metadata_text", std::string());
    if (const auto& g = doc.at("guide_text"); !g.is_null()) bundle.guide_text = g.get<std::string>();
    bundle.question_text = doc.at("question_text").get<std::string>();
    const auto format = doc.at("answer_format").get<std::string>();
    bundle.answer_format = format == "think_then_answer" ? AnswerFormat::kThinkThenAnswer : AnswerFormat::kShortAnswer;
    bundle.answer_instruction = doc.value("answer_instruction", std::string());
    bundle.transform_sidecar = doc.value("transform_sidecar", nlohmann::json::object());
    bundle.drawn_marks = doc.value("drawn_marks", std::vector<MarkId>{});
    return bundle;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("prompt bundle: ") + e.what());
  }
}

std::string serialize_bundle(const PromptBundle& bundle) { return bundle_to_json(bundle).dump(2) + "\n"; }

}  // namespace bevprompt
