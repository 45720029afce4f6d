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

#include "cli/stages.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "bevprompt/bev.hpp"
#include "bevprompt/bundle.hpp"
#include "bevprompt/errors.hpp"
#include "bevprompt/eval.hpp"
#include "bevprompt/gateway.hpp"
#include "bevprompt/keyframes.hpp"
#include "bevprompt/qa.hpp"

namespace bevprompt::cli {
namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static const auto instance = [] {
    auto l = spdlog::stderr_logger_mt("bevprompt");
    l->set_pattern("level=%l %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return instance;
}

std::string kv_quote(std::string_view value) {
  if (!value.empty() && value.find_first_of(" \t\"=") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void require_artifact(const fs::path& path, const std::string& scene_id, std::string_view what, std::string_view producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kMissingArtifact, "scene " + scene_id + ": " + std::string(what) + " " + path.string() +
                                                 " is missing; run `bevprompt " + std::string(producer) + "` first");
  }
}

SceneManifest load_scene(const RunConfig& config, const fs::path& manifest) {
  ManifestOptions options;
  options.strict = config.strict;
  options.warn = [&manifest](const std::string& message) {
    log_event(LogLevel::kWarn, {{"manifest", manifest.string()}, {"msg", message}});
  };
  return load_manifest(manifest, options);
}

// Stamp text is a function of stage parameters and input bytes only, so
// reruns with identical inputs produce identical stamps.
std::string make_stamp(const RunConfig& config, std::string_view stage, const std::vector<fs::path>& inputs) {
  nlohmann::json digests = nlohmann::json::array();
  for (const auto& input : inputs) digests.push_back({input.filename().string(), file_digest(input)});
  return nlohmann::json{{"parameters", stage_parameters(config, stage)}, {"inputs", digests}}.dump(2) + "\n";
}

bool up_to_date(const RunConfig& config, const fs::path& dir, const std::string& stamp,
                const std::vector<fs::path>& outputs) {
  if (config.force) return false;
  std::ifstream in(dir / ".stamp", std::ios::binary);
  if (!in) return false;
  const std::string existing{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (existing != stamp) return false;
  return std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
}

void reset_dir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

std::string zero_pad(std::uint64_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*llu", width, static_cast<unsigned long long>(value));
  return buf;
}

std::vector<QaCategory> selected_categories(const RunConfig& config) {
  if (!config.categories.empty()) return config.categories;
  return generated_categories();
}

StageResult skipped(std::string_view stage, const std::string& scene_id) {
  log_event(LogLevel::kInfo, {{"stage", std::string(stage)}, {"scene", scene_id}, {"status", "up-to-date"}});
  return {true, 0};
}

void done(std::string_view stage, const std::string& scene_id, std::initializer_list<LogField> extra = {}) {
  std::ostringstream line;
  line << "stage=" << stage << " scene=" << kv_quote(scene_id) << " status=done";
  for (const auto& [key, value] : extra) line << ' ' << key << '=' << kv_quote(value);
  logger()->info(line.str());
}

}  // namespace

void set_log_level(LogLevel level) {
  static const spdlog::level::level_enum map[] = {spdlog::level::debug, spdlog::level::info, spdlog::level::warn,
                                                  spdlog::level::err};
  logger()->set_level(map[static_cast<int>(level)]);
}

void log_event(LogLevel level, std::initializer_list<LogField> fields) {
  std::string line;
  for (const auto& [key, value] : fields) {
    if (!line.empty()) line += ' ';
    line += std::string(key) + "=" + kv_quote(value);
  }
  switch (level) {
    case LogLevel::kDebug: logger()->debug(line); break;
    case LogLevel::kInfo: logger()->info(line); break;
    case LogLevel::kWarn: logger()->warn(line); break;
    case LogLevel::kError: logger()->error(line); break;
  }
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::vector<fs::path> expand_scene_specs(const std::vector<std::string>& specs) {
  std::set<fs::path> found;
  auto add = [&found](const fs::path& p) {
    if (fs::is_directory(p)) {
      if (!fs::exists(p / "manifest.json")) throw Error(ErrorKind::kIo, "no manifest.json in " + p.string());
      found.insert(fs::absolute(p / "manifest.json").lexically_normal());
    } else if (fs::exists(p)) {
      found.insert(fs::absolute(p).lexically_normal());
    } else {
      throw Error(ErrorKind::kIo, "scene " + p.string() + " does not exist");
    }
  };
  for (const auto& spec : specs) {
    if (spec.find_first_of("*?[") == std::string::npos) {
      add(spec);
      continue;
    }
    glob_t matches{};
    const int rc = ::glob(spec.c_str(), 0, nullptr, &matches);
    if (rc == 0) {
      for (std::size_t i = 0; i < matches.gl_pathc; ++i) add(matches.gl_pathv[i]);
    }
    globfree(&matches);
    if (rc != 0) throw Error(ErrorKind::kIo, "pattern '" + spec + "' matched no scenes");
  }
  return {found.begin(), found.end()};
}

std::string peek_scene_id(const fs::path& manifest) {
  try {
    return read_json(manifest).value("scene_id", manifest.parent_path().filename().string());
  } catch (const std::exception&) {
    return manifest.parent_path().filename().string();
  }
}

fs::path stage_dir(const RunConfig& config, const std::string& scene_id, std::string_view stage) {
  return config.output_root / scene_id / stage;
}

StageResult run_ingest(const RunConfig& config, const fs::path& manifest) {
  const SceneManifest scene = load_scene(config, manifest);
  const fs::path dir = stage_dir(config, scene.scene_id, "ingest");
  const std::string stamp = make_stamp(config, "ingest", {manifest, scene.cloud_path});
  if (up_to_date(config, dir, stamp, {dir / "summary.json"})) return skipped("ingest", scene.scene_id);

  const PointCloud cloud = load_point_cloud(scene.cloud_path);
  if (cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "scene " + scene.scene_id + ": point cloud is empty");
  Eigen::Vector3d lo = cloud.points.front();
  Eigen::Vector3d hi = lo;
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::map<std::string, int> labels;
  std::vector<MarkId> ids;
  for (const auto& obj : scene.objects) {
    ++labels[obj.label];
    ids.push_back(obj.mark_id);
  }
  std::vector<std::uint32_t> frames;
  for (const auto& f : scene.frames) frames.push_back(f.frame_index);
  const nlohmann::json summary = {{"scene_id", scene.scene_id},
                                  {"manifest", manifest.string()},
                                  {"cloud", scene.cloud_path.string()},
                                  {"objects", scene.objects.size()},
                                  {"mark_ids", ids},
                                  {"labels", labels},
                                  {"frames", frames},
                                  {"points", cloud.size()},
                                  {"colored", cloud.colors.has_value()},
                                  {"bounds", {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}}},
                                  {"depth_scale", scene.depth_scale}};
  reset_dir(dir);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  write_text(dir / ".stamp", stamp);
  done("ingest", scene.scene_id, {{"objects", std::to_string(scene.objects.size())}, {"points", std::to_string(cloud.size())}});
  return {};
}

StageResult run_render(const RunConfig& config, const fs::path& manifest) {
  const SceneManifest scene = load_scene(config, manifest);
  require_artifact(stage_dir(config, scene.scene_id, "ingest") / "summary.json", scene.scene_id, "ingest summary", "ingest");
  const fs::path dir = stage_dir(config, scene.scene_id, "render");
  const std::string stamp = make_stamp(config, "render", {manifest, scene.cloud_path});
  if (up_to_date(config, dir, stamp, {dir / "bev.png", dir / "bev_transform.json"})) return skipped("render", scene.scene_id);

  const PointCloud cloud = load_point_cloud(scene.cloud_path);
  const PointCloud floor_view = remove_ceiling(cloud, config.ceiling);
  BevCanvas canvas = render_bev(floor_view, 0.0, config.bev);
  draw_marks(canvas, scene.objects, std::nullopt);

  nlohmann::json sidecar = transform_sidecar(canvas);
  nlohmann::json marks = nlohmann::json::array();
  for (const auto& m : canvas.marks) {
    marks.push_back({{"mark_id", m.mark_id}, {"u", m.u}, {"v", m.v}, {"radius_px", m.radius_px}});
  }
  sidecar["marks"] = marks;
  sidecar["points_total"] = cloud.size();
  sidecar["points_rendered"] = floor_view.size();

  reset_dir(dir);
  write_png(dir / "bev.png", canvas.image);
  write_text(dir / "bev_transform.json", sidecar.dump(2) + "\n");
  write_text(dir / ".stamp", stamp);
  done("render", scene.scene_id, {{"meters_per_pixel", std::to_string(canvas.meters_per_pixel)}});
  return {};
}

StageResult run_keyframes(const RunConfig& config, const fs::path& manifest) {
  const SceneManifest scene = load_scene(config, manifest);
  require_artifact(stage_dir(config, scene.scene_id, "ingest") / "summary.json", scene.scene_id, "ingest summary", "ingest");
  const fs::path dir = stage_dir(config, scene.scene_id, "keyframes");
  const std::string stamp = make_stamp(config, "keyframes", {manifest});
  if (up_to_date(config, dir, stamp, {dir / "index.json"})) return skipped("keyframes", scene.scene_id);

  const KeyframeResult result = select_keyframes(scene, scene.objects, {config.visibility, true});
  reset_dir(dir);
  std::vector<RgbImage> images;
  nlohmann::json frame_files = nlohmann::json::array();
  for (const auto& kf : result.selected) {
    const std::string name = "frame_" + zero_pad(kf.frame_index, 6) + ".png";
    write_png(dir / name, kf.image);
    frame_files.push_back(name);
    images.push_back(kf.image);
  }
  nlohmann::json grid_files = nlohmann::json::array();
  if (!images.empty()) {
    const auto grids = stitch_grids(images, config.tile_width, config.tile_height);
    for (std::size_t g = 0; g < grids.size(); ++g) {
      const std::string name = "grid_" + zero_pad(g, 2) + ".png";
      write_png(dir / name, grids[g]);
      grid_files.push_back(name);
    }
  }
  nlohmann::json index = keyframe_index(scene.scene_id, result);
  index["frame_images"] = frame_files;
  index["grids"] = grid_files;
  write_text(dir / "index.json", index.dump(2) + "\n");
  write_text(dir / ".stamp", stamp);
  done("keyframes", scene.scene_id,
       {{"selected", std::to_string(result.selected.size())}, {"uncovered", std::to_string(result.uncovered.size())}});
  return {};
}

StageResult run_genqa(const RunConfig& config, const fs::path& manifest) {
  const SceneManifest scene = load_scene(config, manifest);
  const fs::path transform_path = stage_dir(config, scene.scene_id, "render") / "bev_transform.json";
  require_artifact(transform_path, scene.scene_id, "BEV transform", "render");
  const fs::path dir = stage_dir(config, scene.scene_id, "genqa");
  std::vector<fs::path> inputs = {manifest, scene.cloud_path, transform_path};
  if (config.import_shard) inputs.push_back(*config.import_shard);
  const std::string stamp = make_stamp(config, "genqa", inputs);
  if (up_to_date(config, dir, stamp, {dir / "qa.jsonl"})) return skipped("genqa", scene.scene_id);

  QaOptions options = config.qa;
  const double mpp = read_json(transform_path).at("meters_per_pixel").get<double>();
  options.min_separation_m = separation_for_bev(mpp, config.min_separation_px);

  std::optional<PointCloud> cloud;
  std::vector<QAItem> items;
  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json per_category = nlohmann::json::object();
  for (QaCategory category : selected_categories(config)) {
    if (!is_generated(category)) {
      throw Error(ErrorKind::kValidation, std::string(category_name(category)) + " items can only be imported (--import)");
    }
    if (category == QaCategory::kRoomSize && !cloud) cloud = load_point_cloud(scene.cloud_path);
    // Room size has a single question per scene; other categories draw until
    // enough distinct questions exist or the attempt budget runs out.
    const unsigned wanted = category == QaCategory::kRoomSize ? std::min(1u, config.count_per_category)
                                                              : config.count_per_category;
    const unsigned budget = category == QaCategory::kRoomSize ? wanted : wanted * 4;
    std::set<std::string> questions;
    unsigned produced = 0;
    for (unsigned index = 0; index < budget && produced < wanted; ++index) {
      try {
        QAItem item = generate_item(category, scene, cloud ? &*cloud : nullptr, config.seed, index, options, config.scheme);
        if (!questions.insert(item.question).second) continue;
        validate_item(item, &scene);
        items.push_back(std::move(item));
        ++produced;
      } catch (const Error& e) {
        failures.push_back({{"category", category_name(category)}, {"index", index}, {"error", e.what()}});
        log_event(LogLevel::kWarn, {{"stage", "genqa"},
                                    {"scene", scene.scene_id},
                                    {"category", std::string(category_name(category))},
                                    {"index", std::to_string(index)},
                                    {"error", std::string(error_kind_name(e.kind()))},
                                    {"msg", e.what()}});
      }
    }
    per_category[std::string(category_name(category))] = produced;
  }
  if (config.import_shard) {
    std::size_t imported = 0;
    for (auto& item : read_shard(*config.import_shard)) {
      if (item.scene_id != scene.scene_id) continue;
      try {
        validate_item(item, &scene);
      } catch (const Error& e) {
        throw Error(e.kind(), "scene " + scene.scene_id + ", imported item " + item.qa_id + ": " + e.what());
      }
      items.push_back(std::move(item));
      ++imported;
    }
    per_category["imported"] = imported;
  }

  reset_dir(dir);
  write_shard(dir / "qa.jsonl", items);
  if (config.stubs) {
    for (const auto& item : items) write_text(dir / "stubs" / (item.qa_id + ".txt"), emit_augmentation_stub(item));
  }
  write_text(dir / "summary.json",
             nlohmann::json{{"items", items.size()}, {"per_category", per_category}, {"failures", failures},
                            {"min_separation_m", options.min_separation_m}}
                     .dump(2) +
                 "\n");
  write_text(dir / ".stamp", stamp);
  done("genqa", scene.scene_id, {{"items", std::to_string(items.size())}, {"failures", std::to_string(failures.size())}});
  return {false, 0};
}

StageResult run_bundle(const RunConfig& config, const fs::path& manifest) {
  const SceneManifest scene = load_scene(config, manifest);
  const fs::path render_dir = stage_dir(config, scene.scene_id, "render");
  require_artifact(render_dir / "bev.png", scene.scene_id, "BEV image", "render");
  const fs::path shard = stage_dir(config, scene.scene_id, "genqa") / "qa.jsonl";
  require_artifact(shard, scene.scene_id, "QA shard", "genqa");
  const fs::path dir = stage_dir(config, scene.scene_id, "bundle");
  const std::string stamp = make_stamp(config, "bundle", {manifest, scene.cloud_path, render_dir / "bev.png", shard});
  if (up_to_date(config, dir, stamp, {dir / "index.json"})) return skipped("bundle", scene.scene_id);

  const std::vector<QAItem> items = read_shard(shard);
  const PointCloud floor_view = remove_ceiling(load_point_cloud(scene.cloud_path), config.ceiling);
  reset_dir(dir / "images");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) fs::remove(entry.path());
  }

  const fs::path rel_dir = fs::path(scene.scene_id) / "bundle";
  nlohmann::json index_entries = nlohmann::json::array();
  for (const auto& item : items) {
    const BevCanvas canvas = render_item_bev(floor_view, item, scene, config.ablation, config.bev);
    const fs::path bev_rel = rel_dir / "images" / (item.qa_id + "_bev.png");
    write_png(config.output_root / bev_rel, canvas.image);

    SceneArtifacts artifacts;
    artifacts.scene = &scene;
    artifacts.root = config.output_root;
    artifacts.bev_image = bev_rel;
    artifacts.bev = &canvas;
    if (!is_generated(item.category)) {
      std::vector<ObjectInstance> objects;
      for (MarkId id : item.involved_marks) objects.push_back(*scene.find(id));
      const KeyframeResult keyframes = select_keyframes(scene, objects, {config.visibility, true});
      std::vector<RgbImage> images;
      for (const auto& kf : keyframes.selected) images.push_back(kf.image);
      if (!images.empty()) {
        const auto grids = stitch_grids(images, config.tile_width, config.tile_height);
        for (std::size_t g = 0; g < grids.size(); ++g) {
          const fs::path grid_rel = rel_dir / "images" / (item.qa_id + "_grid" + zero_pad(g, 2) + ".png");
          write_png(config.output_root / grid_rel, grids[g]);
          artifacts.keyframe_grids.push_back(grid_rel);
        }
      }
    }
    const PromptBundle bundle = assemble_bundle(item, artifacts, config.ablation);
    const std::string file = item.qa_id + ".json";
    write_text(dir / file, serialize_bundle(bundle));
    index_entries.push_back({{"qa_id", item.qa_id},
                             {"category", category_name(item.category)},
                             {"path", (rel_dir / file).generic_string()},
                             {"images", bundle.images.size()}});
  }
  const nlohmann::json index = {{"scene_id", scene.scene_id},
                                {"guide_version", kGuidePromptVersion},
                                {"ablation",
                                 {{"metadata", config.ablation.metadata},
                                  {"filter", config.ablation.filter_marks},
                                  {"rotation", config.ablation.rotation},
                                  {"guide", config.ablation.guide}}},
                                {"bundles", index_entries}};
  write_text(dir / "index.json", index.dump(2) + "\n");
  write_text(dir / ".stamp", stamp);
  done("bundle", scene.scene_id, {{"bundles", std::to_string(items.size())}});
  return {};
}

StageResult run_dispatch(const RunConfig& config, const fs::path& manifest) {
  if (!config.gateway) throw Error(ErrorKind::kValidation, "dispatch needs a gateway config (--gateway or config.gateway)");
  const std::string scene_id = peek_scene_id(manifest);
  const fs::path index_path = stage_dir(config, scene_id, "bundle") / "index.json";
  require_artifact(index_path, scene_id, "bundle index", "bundle");
  std::vector<PromptBundle> bundles;
  for (const auto& entry : read_json(index_path).at("bundles")) {
    bundles.push_back(bundle_from_json(read_json(config.output_root / entry.at("path").get<std::string>())));
  }
  BatchOptions options;
  options.concurrency = config.concurrency;
  options.log_path = stage_dir(config, scene_id, "dispatch") / "responses.jsonl";
  const BatchResult result = run_batch(bundles, *config.gateway, config.output_root, options, GatewayRuntime{});
  for (const auto& r : result.responses) {
    if (!r.ok()) {
      log_event(LogLevel::kWarn, {{"stage", "dispatch"}, {"scene", scene_id}, {"qa_id", r.qa_id}, {"error", r.error.value_or("")}});
    }
  }
  done("dispatch", scene_id,
       {{"sent", std::to_string(result.succeeded + result.failed)},
        {"skipped", std::to_string(result.skipped)},
        {"failed", std::to_string(result.failed)},
        {"prompt_tokens", std::to_string(result.total_usage.prompt)},
        {"completion_tokens", std::to_string(result.total_usage.completion)}});
  return {false, result.failed};
}

void run_eval(const RunConfig& config, const std::vector<fs::path>& manifests,
              const std::optional<fs::path>& responses_override) {
  std::vector<ScoredItem> scored;
  std::vector<ModelResponse> shared;
  if (responses_override) {
    if (!fs::exists(*responses_override)) throw Error(ErrorKind::kIo, "response log " + responses_override->string() + " not found");
    shared = read_response_log(*responses_override);
  }
  for (const auto& manifest : manifests) {
    const std::string scene_id = peek_scene_id(manifest);
    const fs::path shard = stage_dir(config, scene_id, "genqa") / "qa.jsonl";
    require_artifact(shard, scene_id, "QA shard", "genqa");
    std::vector<ModelResponse> responses = shared;
    if (!responses_override) {
      const fs::path log = stage_dir(config, scene_id, "dispatch") / "responses.jsonl";
      require_artifact(log, scene_id, "response log", "dispatch");
      responses = read_response_log(log);
    }
    auto part = score_items(read_shard(shard), responses);
    scored.insert(scored.end(), part.begin(), part.end());
  }
  const EvalReport report = aggregate(scored, config.weighted);
  const fs::path report_path = config.report_path.value_or(config.output_root / "eval" / "report.json");
  write_text(report_path, report_to_json(report).dump(2) + "\n");
  const std::string table = report_table(report);
  if (config.table_path) write_text(*config.table_path, table);
  std::cout << table;
  log_event(LogLevel::kInfo, {{"stage", "eval"},
                              {"status", "done"},
                              {"items", std::to_string(scored.size())},
                              {"overall", std::to_string(report.overall)},
                              {"report", report_path.string()}});
}

}  // namespace bevprompt::cli
