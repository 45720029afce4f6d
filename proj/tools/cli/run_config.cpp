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

#include "cli/run_config.hpp"

#include <fstream>
#include <set>

#include "bevprompt/errors.hpp"

namespace bevprompt::cli {
namespace {

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (known.count(key) == 0) throw Error(ErrorKind::kValidation, where + ": unknown key '" + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "run config must be a JSON object");
  reject_unknown(doc,
                 {"scenes", "output_root", "workers", "strict", "render", "keyframes", "qa", "ablation", "gateway",
                  "dispatch", "eval"},
                 "config");
  RunConfig c;
  try {
    for (const auto& s : doc.value("scenes", std::vector<std::string>{})) {
      const bool pattern = s.find_first_of("*?[") != std::string::npos;
      c.scenes.push_back(pattern || std::filesystem::path(s).is_absolute() ? s : (base_dir / s).string());
    }
    if (doc.contains("output_root")) c.output_root = resolve(base_dir, doc["output_root"].get<std::string>());
    c.workers = doc.value("workers", c.workers);
    c.strict = doc.value("strict", c.strict);

    if (const auto& r = doc.value("render", nlohmann::json::object()); !r.empty()) {
      reject_unknown(r, {"resolution", "margin_px", "ceiling_fraction"}, "config.render");
      c.bev.resolution = r.value("resolution", c.bev.resolution);
      c.bev.margin_px = r.value("margin_px", c.bev.margin_px);
      c.ceiling.keep_fraction = r.value("ceiling_fraction", c.ceiling.keep_fraction);
    }
    if (const auto& k = doc.value("keyframes", nlohmann::json::object()); !k.empty()) {
      reject_unknown(k, {"sample_count", "occlusion_tolerance_m", "border_margin_px", "tile_width", "tile_height"},
                     "config.keyframes");
      c.visibility.sample_count = k.value("sample_count", c.visibility.sample_count);
      c.visibility.occlusion_tolerance = k.value("occlusion_tolerance_m", c.visibility.occlusion_tolerance);
      c.visibility.border_margin = k.value("border_margin_px", c.visibility.border_margin);
      c.tile_width = k.value("tile_width", c.tile_width);
      c.tile_height = k.value("tile_height", c.tile_height);
    }
    if (const auto& q = doc.value("qa", nlohmann::json::object()); !q.empty()) {
      reject_unknown(q,
                     {"seed", "count", "categories", "scheme", "min_separation_px", "turn_threshold_deg",
                      "rel_distance_margin_m", "rel_distance_metric", "route_clearance_m", "route_min_spacing_m",
                      "route_reversal", "stoplist", "import", "stubs"},
                     "config.qa");
      c.seed = q.value("seed", c.seed);
      c.count_per_category = q.value("count", c.count_per_category);
      for (const auto& name : q.value("categories", std::vector<std::string>{})) c.categories.push_back(parse_category(name));
      if (q.contains("scheme")) c.scheme = parse_scheme(q["scheme"].get<std::string>());
      c.min_separation_px = q.value("min_separation_px", c.min_separation_px);
      c.qa.turn_threshold_deg = q.value("turn_threshold_deg", c.qa.turn_threshold_deg);
      c.qa.rel_distance_margin_m = q.value("rel_distance_margin_m", c.qa.rel_distance_margin_m);
      if (q.contains("rel_distance_metric")) {
        const auto metric = q["rel_distance_metric"].get<std::string>();
        if (metric != "closest_corner" && metric != "center") {
          throw Error(ErrorKind::kValidation, "config.qa.rel_distance_metric must be closest_corner or center");
        }
        c.qa.rel_distance_metric = metric == "center" ? DistanceMetric::kCenter : DistanceMetric::kClosestCorner;
      }
      c.qa.route_clearance_m = q.value("route_clearance_m", c.qa.route_clearance_m);
      c.qa.route_min_spacing_m = q.value("route_min_spacing_m", c.qa.route_min_spacing_m);
      c.qa.route_reversal = q.value("route_reversal", c.qa.route_reversal);
      if (q.contains("stoplist")) {
        const auto list = q["stoplist"].get<std::vector<std::string>>();
        c.qa.stoplist = std::set<std::string>(list.begin(), list.end());
      }
      if (q.contains("import")) c.import_shard = resolve(base_dir, q["import"].get<std::string>());
      c.stubs = q.value("stubs", c.stubs);
    }
    if (const auto& a = doc.value("ablation", nlohmann::json::object()); !a.empty()) {
      reject_unknown(a, {"metadata", "filter", "rotation", "guide"}, "config.ablation");
      c.ablation.metadata = a.value("metadata", c.ablation.metadata);
      c.ablation.filter_marks = a.value("filter", c.ablation.filter_marks);
      c.ablation.rotation = a.value("rotation", c.ablation.rotation);
      c.ablation.guide = a.value("guide", c.ablation.guide);
    }
    if (doc.contains("gateway")) {
      const auto& g = doc["gateway"];
      if (g.is_string()) {
        const auto path = resolve(base_dir, g.get<std::string>());
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::kIo, "cannot read gateway config " + path.string());
        c.gateway = gateway_config_from_json(nlohmann::json::parse(in));
      } else {
        c.gateway = gateway_config_from_json(g);
      }
    }
    if (const auto& d = doc.value("dispatch", nlohmann::json::object()); !d.empty()) {
      reject_unknown(d, {"concurrency"}, "config.dispatch");
      c.concurrency = d.value("concurrency", c.concurrency);
    }
    if (const auto& e = doc.value("eval", nlohmann::json::object()); !e.empty()) {
      reject_unknown(e, {"report", "table", "weighted"}, "config.eval");
      if (e.contains("report")) c.report_path = resolve(base_dir, e["report"].get<std::string>());
      if (e.contains("table")) c.table_path = resolve(base_dir, e["table"].get<std::string>());
      c.weighted = e.value("weighted", c.weighted);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, std::filesystem::absolute(path).parent_path());
}

nlohmann::json stage_parameters(const RunConfig& c, std::string_view stage) {
  nlohmann::json p = {{"stage", stage}};
  if (stage == "ingest") {
    p["strict"] = c.strict;
  } else if (stage == "render") {
    p["resolution"] = c.bev.resolution;
    p["margin_px"] = c.bev.margin_px;
    p["ceiling_fraction"] = c.ceiling.keep_fraction;
  } else if (stage == "keyframes") {
    p["sample_count"] = c.visibility.sample_count;
    p["occlusion_tolerance_m"] = c.visibility.occlusion_tolerance;
    p["border_margin_px"] = c.visibility.border_margin;
    p["tile"] = {c.tile_width, c.tile_height};
  } else if (stage == "genqa") {
    nlohmann::json categories = nlohmann::json::array();
    for (auto cat : c.categories) categories.push_back(category_name(cat));
    p["seed"] = c.seed;
    p["count"] = c.count_per_category;
    p["categories"] = categories;
    p["scheme"] = scheme_name(c.scheme);
    p["min_separation_px"] = c.min_separation_px;
    p["turn_threshold_deg"] = c.qa.turn_threshold_deg;
    p["rel_distance_margin_m"] = c.qa.rel_distance_margin_m;
    p["rel_distance_metric"] = c.qa.rel_distance_metric == DistanceMetric::kCenter ? "center" : "closest_corner";
    p["route_clearance_m"] = c.qa.route_clearance_m;
    p["route_min_spacing_m"] = c.qa.route_min_spacing_m;
    p["route_reversal"] = c.qa.route_reversal;
    p["stoplist"] = c.qa.stoplist;
    p["stubs"] = c.stubs;
    p["import"] = c.import_shard ? c.import_shard->string() : "";
  } else if (stage == "bundle") {
    p["metadata"] = c.ablation.metadata;
    p["filter"] = c.ablation.filter_marks;
    p["rotation"] = c.ablation.rotation;
    p["guide"] = c.ablation.guide;
    p["guide_version"] = kGuidePromptVersion;
    p["resolution"] = c.bev.resolution;
    p["margin_px"] = c.bev.margin_px;
    p["ceiling_fraction"] = c.ceiling.keep_fraction;
    p["visibility"] = {c.visibility.sample_count, c.visibility.occlusion_tolerance, c.visibility.border_margin};
    p["tile"] = {c.tile_width, c.tile_height};
  }
  return p;
}

}  // namespace bevprompt::cli
