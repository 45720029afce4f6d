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

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/bev.hpp"
#include "bevprompt/qa.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {

inline constexpr std::string_view kGuidePromptVersion = "guide-v1";

enum class ImageRole { kBev, kKeyframeGrid };
enum class AnswerFormat { kThinkThenAnswer, kShortAnswer };

std::string_view image_role_name(ImageRole role);
std::string_view answer_format_name(AnswerFormat format);

struct BundleImage {
  ImageRole role = ImageRole::kBev;
  /// Relative to the artifact root so bundles are relocatable.
  std::filesystem::path path;

  bool operator==(const BundleImage&) const = default;
};

struct PromptBundle {
  std::string qa_id;
  QaCategory category = QaCategory::kCount;
  std::vector<BundleImage> images;
  std::string metadata_text;
  std::optional<std::string> guide_text;
  std::string question_text;
  AnswerFormat answer_format = AnswerFormat::kShortAnswer;
  std::string answer_instruction;
  nlohmann::json transform_sidecar = nlohmann::json::object();
  /// Marks drawn on the BEV, ascending.
  std::vector<MarkId> drawn_marks;

  bool operator==(const PromptBundle&) const = default;
};

/// Ablation switches; all on reproduces the full prompting setup.
struct BundleOptions {
  bool metadata = true;
  bool filter_marks = true;
  bool rotation = true;
  bool guide = true;
};

/// Everything assemble_bundle needs besides the item itself.
struct SceneArtifacts {
  const SceneManifest* scene = nullptr;
  std::filesystem::path root;
  std::filesystem::path bev_image;
  const BevCanvas* bev = nullptr;
  std::vector<std::filesystem::path> keyframe_grids;
};

/// `mark <id>: <label>, center=(x.xx, y.yy, z.zz) m` per filtered object,
/// ascending by id, newline separated.
std::string build_metadata_text(const std::vector<ObjectInstance>& objects, const std::set<MarkId>& filter_ids);
std::optional<std::string> build_guide_prompt(QaCategory category);
AnswerFormat answer_format_for(QaCategory category);
std::string answer_instruction(AnswerFormat format, AnswerKind kind);
/// The item's question followed by lettered options for choice items.
std::string full_question_text(const QAItem& item);

/// Marks a bundle draws and describes: the item's involved marks, or every
/// object when filtering is disabled.
std::set<MarkId> bundle_marks(const QAItem& item, const SceneManifest& scene, const BundleOptions& options);
/// Heading-aligned rotation for relative-direction items, 0 otherwise.
double bundle_rotation(const QAItem& item, const SceneManifest& scene, const BundleOptions& options);
/// Renders the per-item BEV from a ceiling-removed cloud and draws its marks.
BevCanvas render_item_bev(const PointCloud& cloud, const QAItem& item, const SceneManifest& scene,
                          const BundleOptions& options, const BevOptions& bev_options = {});

/// Throws MissingArtifact when the BEV (or a required keyframe grid) is absent.
PromptBundle assemble_bundle(const QAItem& item, const SceneArtifacts& artifacts, const BundleOptions& options = {});

nlohmann::json bundle_to_json(const PromptBundle& bundle);
PromptBundle bundle_from_json(const nlohmann::json& doc);
/// Stable text form: sorted keys, two-space indent, trailing newline.
std::string serialize_bundle(const PromptBundle& bundle);

}  // namespace bevprompt
