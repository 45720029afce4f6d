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

#include "cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "bevprompt/errors.hpp"
#include "bevprompt/synthetic.hpp"
#include "cli/run_config.hpp"
#include "cli/stages.hpp"

namespace bevprompt::cli {
namespace fs = std::filesystem;

namespace {

using StageFn = std::function<StageResult(const RunConfig&, const fs::path&)>;

struct Outcome {
  bool validation_error = false;
  bool runtime_error = false;
  std::size_t partial_failures = 0;

  int exit_code() const {
    if (validation_error) return kExitValidation;
    if (runtime_error) return kExitRuntime;
    if (partial_failures > 0) return kExitPartial;
    return kExitOk;
  }
};

void record_error(Outcome& outcome, std::string_view stage, const std::string& scene, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  const bool validation = err != nullptr && is_validation_kind(err->kind());
  (validation ? outcome.validation_error : outcome.runtime_error) = true;
  log_event(LogLevel::kError, {{"stage", std::string(stage)},
                               {"scene", scene},
                               {"error", err != nullptr ? std::string(error_kind_name(err->kind())) : "Exception"},
                               {"msg", e.what()}});
}

// Runs each stage over every scene; scenes fan out over `workers` threads and
// stages run in order within a scene.
Outcome run_stages(const RunConfig& config, const std::vector<std::pair<std::string, StageFn>>& stages) {
  Outcome outcome;
  std::vector<fs::path> manifests;
  try {
    manifests = expand_scene_specs(config.scenes);
  } catch (const std::exception& e) {
    record_error(outcome, "resolve", "-", e);
    return outcome;
  }
  if (manifests.empty()) {
    log_event(LogLevel::kError, {{"error", "Validation"}, {"msg", "no scenes given (use --scene or config.scenes)"}});
    outcome.validation_error = true;
    return outcome;
  }
  std::mutex guard;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < manifests.size(); i = next.fetch_add(1)) {
      const fs::path& manifest = manifests[i];
      const std::string scene = peek_scene_id(manifest);
      for (const auto& [name, fn] : stages) {
        try {
          const StageResult result = fn(config, manifest);
          std::lock_guard lock(guard);
          outcome.partial_failures += result.failures;
        } catch (const std::exception& e) {
          std::lock_guard lock(guard);
          record_error(outcome, name, scene, e);
          break;
        }
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.workers, 1, manifests.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return outcome;
}

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::string> config_path;
  std::vector<std::string> scenes;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  bool force = false;
  bool strict = false;
  bool quiet = false;
  bool verbose = false;

  std::optional<int> resolution;
  std::optional<int> margin;
  std::optional<unsigned> samples;
  std::optional<double> tau;
  std::optional<int> border;
  std::optional<int> tile_width;
  std::optional<int> tile_height;

  std::optional<std::uint64_t> seed;
  std::optional<unsigned> count;
  std::vector<std::string> categories;
  std::optional<std::string> scheme;
  std::optional<std::string> import_path;
  bool stubs = false;
  bool route_reversal = false;
  std::optional<double> turn_threshold;
  std::optional<double> clearance;
  std::optional<double> margin_m;

  bool no_metadata = false;
  bool no_filter = false;
  bool no_rotation = false;
  bool no_guide = false;

  std::optional<std::string> gateway;
  std::optional<unsigned> concurrency;

  std::optional<std::string> report;
  std::optional<std::string> table;
  std::optional<std::string> responses;
  bool weighted = false;

  std::string synth_dir;
  std::optional<int> synth_frames;
  std::optional<std::string> synth_scene_id;
};

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config_path ? load_run_config(*o.config_path) : RunConfig{};
  if (!o.scenes.empty()) c.scenes = o.scenes;
  if (o.out) c.output_root = *o.out;
  if (o.workers) c.workers = *o.workers;
  c.force = c.force || o.force;
  c.strict = c.strict || o.strict;
  if (o.resolution) c.bev.resolution = *o.resolution;
  if (o.margin) c.bev.margin_px = *o.margin;
  if (o.samples) c.visibility.sample_count = *o.samples;
  if (o.tau) c.visibility.occlusion_tolerance = *o.tau;
  if (o.border) c.visibility.border_margin = *o.border;
  if (o.tile_width) c.tile_width = *o.tile_width;
  if (o.tile_height) c.tile_height = *o.tile_height;
  if (o.seed) c.seed = *o.seed;
  if (o.count) c.count_per_category = *o.count;
  if (!o.categories.empty()) {
    c.categories.clear();
    for (const auto& name : o.categories) c.categories.push_back(parse_category(name));
  }
  if (o.scheme) c.scheme = parse_scheme(*o.scheme);
  if (o.import_path) c.import_shard = fs::path(*o.import_path);
  c.stubs = c.stubs || o.stubs;
  c.qa.route_reversal = c.qa.route_reversal || o.route_reversal;
  if (o.turn_threshold) c.qa.turn_threshold_deg = *o.turn_threshold;
  if (o.clearance) c.qa.route_clearance_m = *o.clearance;
  if (o.margin_m) c.qa.rel_distance_margin_m = *o.margin_m;
  if (o.no_metadata) c.ablation.metadata = false;
  if (o.no_filter) c.ablation.filter_marks = false;
  if (o.no_rotation) c.ablation.rotation = false;
  if (o.no_guide) c.ablation.guide = false;
  if (o.gateway) {
    std::ifstream in(*o.gateway);
    if (!in) throw Error(ErrorKind::kIo, "cannot read gateway config " + *o.gateway);
    try {
      c.gateway = gateway_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, *o.gateway + ": " + e.what());
    }
  }
  if (o.concurrency) c.concurrency = *o.concurrency;
  if (o.report) c.report_path = fs::path(*o.report);
  if (o.table) c.table_path = fs::path(*o.table);
  c.weighted = c.weighted || o.weighted;
  if (c.workers == 0) throw Error(ErrorKind::kValidation, "--workers must be >= 1");
  if (c.concurrency == 0) throw Error(ErrorKind::kValidation, "--concurrency must be >= 1");
  validate_params(c.visibility);
  return c;
}

void add_render_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--resolution", o.resolution, "BEV resolution in pixels (default 640)");
  cmd->add_option("--margin", o.margin, "BEV margin in pixels (default 16)");
}

void add_keyframe_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--samples", o.samples, "Frames sampled per scene (default 32)");
  cmd->add_option("--tau", o.tau, "Occlusion tolerance in meters (default 0.15)");
  cmd->add_option("--border", o.border, "Border margin in pixels (default 8)");
  cmd->add_option("--tile-width", o.tile_width, "Grid tile width (default 256)");
  cmd->add_option("--tile-height", o.tile_height, "Grid tile height (default 246)");
}

void add_genqa_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Base seed for all generators");
  cmd->add_option("--count", o.count, "Items per category (default 4)");
  cmd->add_option("--category", o.categories, "Category to generate (repeatable; default all)");
  cmd->add_option("--scheme", o.scheme, "Direction bins: four_way or quadrant");
  cmd->add_option("--import", o.import_path, "Shard of externally sourced items to merge");
  cmd->add_flag("--stubs", o.stubs, "Write augmentation prompt stubs next to the shard");
  cmd->add_flag("--route-reversal", o.route_reversal, "Randomly reverse sampled routes");
  cmd->add_option("--turn-threshold", o.turn_threshold, "Degrees below which a step is Go Forward (default 30)");
  cmd->add_option("--clearance", o.clearance, "Route clearance in meters (default 0.25)");
  cmd->add_option("--distance-margin", o.margin_m, "Relative-distance ambiguity margin in meters (default 0.15)");
}

void add_bundle_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_flag("--no-metadata", o.no_metadata, "Omit object metadata text");
  cmd->add_flag("--no-filter", o.no_filter, "Draw every mark instead of only the question's marks");
  cmd->add_flag("--no-rotation", o.no_rotation, "Keep the BEV unrotated for direction questions");
  cmd->add_flag("--no-guide", o.no_guide, "Omit the guide prompt");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"bevprompt: structured BEV prompting inputs, spatial QA generation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--scene", o.scenes, "Manifest, scene directory or glob (repeatable)");
  app.add_option("--out", o.out, "Output root (default ./out)");
  app.add_option("--workers", o.workers, "Scenes processed in parallel (default 1)");
  app.add_flag("--force", o.force, "Recompute outputs even when up to date");
  app.add_flag("--strict", o.strict, "Reject unknown manifest keys");
  app.add_flag("--quiet", o.quiet, "Only log warnings and errors");
  app.add_flag("--verbose", o.verbose, "Log debug detail");

  auto* ingest = app.add_subcommand("ingest", "Validate manifests and point clouds");
  auto* render = app.add_subcommand("render", "Render the scene-level bird's-eye view");
  add_render_flags(render, o);
  auto* keyframes = app.add_subcommand("keyframes", "Select and stitch keyframes");
  add_keyframe_flags(keyframes, o);
  auto* genqa = app.add_subcommand("genqa", "Generate QA shards");
  add_genqa_flags(genqa, o);
  auto* bundle = app.add_subcommand("bundle", "Assemble prompt bundles");
  add_render_flags(bundle, o);
  add_keyframe_flags(bundle, o);
  add_bundle_flags(bundle, o);
  auto* dispatch = app.add_subcommand("dispatch", "Send bundles to a model endpoint");
  dispatch->add_option("--gateway", o.gateway, "Gateway config (JSON); the API key is read from the environment")
      ->check(CLI::ExistingFile);
  dispatch->add_option("--concurrency", o.concurrency, "Requests in flight (default 1)");
  auto* eval = app.add_subcommand("eval", "Score responses and write a report");
  eval->add_option("--report", o.report, "Report JSON path (default <out>/eval/report.json)");
  eval->add_option("--table", o.table, "Also write the text table here");
  eval->add_option("--responses", o.responses, "Response log to score instead of per-scene logs");
  eval->add_flag("--weighted", o.weighted, "Average over items instead of categories");
  auto* pipeline = app.add_subcommand("pipeline", "Run ingest, render, keyframes, genqa and bundle");
  add_render_flags(pipeline, o);
  add_keyframe_flags(pipeline, o);
  add_genqa_flags(pipeline, o);
  add_bundle_flags(pipeline, o);
  auto* synth = app.add_subcommand("synth", "Write the synthetic fixture scene");
  synth->add_option("--dir", o.synth_dir, "Destination directory")->required();
  synth->add_option("--frames", o.synth_frames, "Number of frames (default 24)");
  synth->add_option("--scene-id", o.synth_scene_id, "Scene id (default synthetic_room)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  set_log_level(o.quiet ? LogLevel::kWarn : (o.verbose ? LogLevel::kDebug : LogLevel::kInfo));

  RunConfig config;
  try {
    if (synth->parsed()) {
      SyntheticOptions options;
      if (o.synth_frames) options.frame_count = *o.synth_frames;
      if (o.synth_scene_id) options.scene_id = *o.synth_scene_id;
      const SceneManifest scene = write_synthetic_scene(o.synth_dir, options);
      log_event(LogLevel::kInfo, {{"stage", "synth"},
                                  {"scene", scene.scene_id},
                                  {"status", "done"},
                                  {"dir", o.synth_dir},
                                  {"frames", std::to_string(scene.frames.size())}});
      return kExitOk;
    }
    config = build_config(o);
  } catch (const Error& e) {
    log_event(LogLevel::kError, {{"error", std::string(error_kind_name(e.kind()))}, {"msg", e.what()}});
    return is_validation_kind(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    log_event(LogLevel::kError, {{"error", "Exception"}, {"msg", e.what()}});
    return kExitRuntime;
  }

  std::vector<std::pair<std::string, StageFn>> stages;
  if (ingest->parsed()) stages = {{"ingest", run_ingest}};
  if (render->parsed()) stages = {{"render", run_render}};
  if (keyframes->parsed()) stages = {{"keyframes", run_keyframes}};
  if (genqa->parsed()) stages = {{"genqa", run_genqa}};
  if (bundle->parsed()) stages = {{"bundle", run_bundle}};
  if (dispatch->parsed()) stages = {{"dispatch", run_dispatch}};
  if (pipeline->parsed()) {
    stages = {{"ingest", run_ingest},
              {"render", run_render},
              {"keyframes", run_keyframes},
              {"genqa", run_genqa},
              {"bundle", run_bundle}};
  }
  if (eval->parsed()) {
    try {
      const auto manifests = expand_scene_specs(config.scenes);
      if (manifests.empty()) throw Error(ErrorKind::kValidation, "no scenes given (use --scene or config.scenes)");
      run_eval(config, manifests, o.responses ? std::optional<fs::path>(*o.responses) : std::nullopt);
      return kExitOk;
    } catch (const Error& e) {
      log_event(LogLevel::kError, {{"stage", "eval"}, {"error", std::string(error_kind_name(e.kind()))}, {"msg", e.what()}});
      return is_validation_kind(e.kind()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
      log_event(LogLevel::kError, {{"stage", "eval"}, {"error", "Exception"}, {"msg", e.what()}});
      return kExitRuntime;
    }
  }
  return run_stages(config, stages).exit_code();
}

}  // namespace bevprompt::cli
