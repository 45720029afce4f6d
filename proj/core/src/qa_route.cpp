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
#include <limits>
#include <map>
#include <string>

#include "bevprompt/errors.hpp"
#include "bevprompt/geometry.hpp"
#include "bevprompt/qa.hpp"
#include "qa_internal.hpp"

namespace bevprompt {
namespace {

using detail::object_ref;
using detail::tagged;

const ObjectInstance& require_mark(const SceneManifest& scene, MarkId id) {
  const ObjectInstance* obj = scene.find(id);
  if (obj == nullptr) throw Error(ErrorKind::kUnknownMarkId, "route references unknown mark " + std::to_string(id));
  return *obj;
}

NavAction classify_turn(double angle_deg, double threshold_deg) {
  if (std::abs(angle_deg) <= threshold_deg) return NavAction::kGoForward;
  return angle_deg > 0.0 ? NavAction::kTurnRight : NavAction::kTurnLeft;
}

std::vector<double> turn_angles(const RouteSpec& route, const SceneManifest& scene) {
  std::vector<Eigen::Vector2d> centers;
  for (MarkId id : route.waypoints) centers.push_back(xy(require_mark(scene, id).obb.center));
  Eigen::Vector2d heading = xy(require_mark(scene, route.facing_mark).obb.center) - centers.front();
  std::vector<double> angles;
  for (std::size_t k = 0; k + 1 < centers.size(); ++k) {
    const Eigen::Vector2d segment = centers[k + 1] - centers[k];
    angles.push_back(signed_angle(heading, segment));
    heading = segment;
  }
  return angles;
}

// Footprints of everything a route may not touch: not on the route and not stop-listed.
std::vector<std::pair<MarkId, Polygon2>> obstacle_footprints(const SceneManifest& scene, const std::vector<MarkId>& route,
                                                             const std::set<std::string>& stoplist) {
  std::vector<std::pair<MarkId, Polygon2>> out;
  for (const auto& obj : scene.objects) {
    if (stoplist.count(obj.label) != 0) continue;
    if (std::find(route.begin(), route.end(), obj.mark_id) != route.end()) continue;
    Polygon2 poly = footprint_polygon(obj.obb);
    if (poly.size() >= 3) out.emplace_back(obj.mark_id, std::move(poly));
  }
  return out;
}

double segment_clearance_to(const Segment2& seg, const std::vector<std::pair<MarkId, Polygon2>>& obstacles,
                            const std::vector<MarkId>& exempt) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, poly] : obstacles) {
    if (std::find(exempt.begin(), exempt.end(), id) != exempt.end()) continue;
    best = std::min(best, segment_clearance(seg, poly));
  }
  return best;
}

}  // namespace

std::vector<NavAction> derive_actions(const RouteSpec& route, const SceneManifest& scene, double turn_threshold_deg) {
  if (route.waypoints.size() < 2) throw Error(ErrorKind::kValidation, "a route needs at least two waypoints");
  std::vector<NavAction> actions;
  for (double angle : turn_angles(route, scene)) actions.push_back(classify_turn(angle, turn_threshold_deg));
  return actions;
}

RouteSpec reverse_route(const RouteSpec& route, const SceneManifest& scene, double turn_threshold_deg) {
  RouteSpec reversed = route;
  std::reverse(reversed.waypoints.begin(), reversed.waypoints.end());
  reversed.facing_mark = reversed.waypoints.at(1);
  reversed.actions = derive_actions(reversed, scene, turn_threshold_deg);
  return reversed;
}

double route_clearance(const RouteSpec& route, const SceneManifest& scene, const std::set<std::string>& stoplist) {
  const auto obstacles = obstacle_footprints(scene, route.waypoints, stoplist);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < route.waypoints.size(); ++k) {
    const Segment2 seg{xy(require_mark(scene, route.waypoints[k]).obb.center),
                       xy(require_mark(scene, route.waypoints[k + 1]).obb.center)};
    best = std::min(best, segment_clearance_to(seg, obstacles, {}));
  }
  return best;
}

RouteSpec sample_route(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options) {
  const auto pool = unambiguous_objects(scene, options);
  if (pool.size() < 3) throw Error(ErrorKind::kNoValidRoute, "scene " + scene.scene_id + " has fewer than 3 unique labels");
  const auto obstacles = obstacle_footprints(scene, {}, options.stoplist);
  Rng rng(seed);

  for (unsigned attempt = 0; attempt < options.route_max_attempts; ++attempt) {
    std::vector<const ObjectInstance*> candidates = pool;
    rng.shuffle(candidates);
    if (candidates.size() > options.route_max_candidates) candidates.resize(options.route_max_candidates);
    const std::size_t want = std::min<std::size_t>(3 + rng.index(3), candidates.size());

    std::vector<MarkId> chain = {candidates[rng.index(candidates.size())]->mark_id};
    while (chain.size() < want) {
      const Eigen::Vector2d from = xy(require_mark(scene, chain.back()).obb.center);
      std::vector<const ObjectInstance*> options_next;
      for (const auto* c : candidates) {
        if (std::find(chain.begin(), chain.end(), c->mark_id) != chain.end()) continue;
        if ((xy(c->obb.center) - from).norm() < options.route_min_spacing_m) continue;
        options_next.push_back(c);
      }
      rng.shuffle(options_next);
      const ObjectInstance* chosen = nullptr;
      for (const auto* c : options_next) {
        std::vector<MarkId> exempt = chain;
        exempt.push_back(c->mark_id);
        const Segment2 seg{from, xy(c->obb.center)};
        if (segment_clearance_to(seg, obstacles, exempt) >= options.route_clearance_m) {
          chosen = c;
          break;
        }
      }
      if (chosen == nullptr) break;
      chain.push_back(chosen->mark_id);
    }
    if (chain.size() < 3) continue;

    RouteSpec route;
    route.waypoints = chain;
    route.facing_mark = chain[1];
    route.clearance_m = options.route_clearance_m;
    if (route_clearance(route, scene, options.stoplist) < options.route_clearance_m) continue;
    route.actions = derive_actions(route, scene, options.turn_threshold_deg);
    return route;
  }
  throw Error(ErrorKind::kNoValidRoute,
              "no collision-free route in " + std::to_string(options.route_max_attempts) + " attempts");
}

QAItem gen_route_plan(const SceneManifest& scene, std::uint64_t seed, const QaOptions& options) {
  RouteSpec route = sample_route(scene, seed, options);
  Rng rng(seed ^ 0x5DEECE66Dull);
  bool reversed = false;
  if (options.route_reversal && rng.index(2) == 1) {
    route = reverse_route(route, scene, options.turn_threshold_deg);
    reversed = true;
  }
  const std::size_t blank = rng.index(route.actions.size());
  const auto angles = turn_angles(route, scene);

  std::vector<const ObjectInstance*> stops;
  for (MarkId id : route.waypoints) stops.push_back(&require_mark(scene, id));
  std::string question = "You are a robot beginning at the " + tagged(*stops.front()) + " and facing the " +
                         tagged(require_mark(scene, route.facing_mark)) + ". You want to navigate to the " +
                         tagged(*stops.back()) +
                         ". Follow the route below; one step is hidden as [please fill in]. Choose 'Go Forward', "
                         "'Turn Left' or 'Turn Right' for it.";
  for (std::size_t k = 0; k < route.actions.size(); ++k) {
    const std::string action = k == blank ? "[please fill in]" : std::string(action_text(route.actions[k]));
    question += "\n" + std::to_string(k + 1) + ". At the " + tagged(*stops[k]) + ": " + action + ", then walk to the " +
                tagged(*stops[k + 1]) + ".";
  }

  std::vector<std::string> choices;
  for (NavAction a : {NavAction::kGoForward, NavAction::kTurnLeft, NavAction::kTurnRight}) {
    choices.emplace_back(action_text(a));
  }
  const auto correct = static_cast<std::size_t>(route.actions[blank]);
  QAItem item = detail::choice_item(scene, QaCategory::kRoutePlan, seed, std::move(question), std::move(choices), correct);
  item.involved_marks = route.waypoints;

  nlohmann::json actions = nlohmann::json::array();
  for (NavAction a : route.actions) actions.push_back(action_text(a));
  nlohmann::json labels = nlohmann::json::array();
  for (const auto* s : stops) labels.push_back(object_ref(*s));
  item.trace = {{"route",
                 {{"waypoints", route.waypoints},
                  {"facing_mark", route.facing_mark},
                  {"actions", actions},
                  {"clearance_m", route.clearance_m}}},
                {"waypoint_labels", labels},
                {"blank_index", blank},
                {"turn_angles_deg", angles},
                {"turn_threshold_deg", options.turn_threshold_deg},
                {"min_clearance_m", std::min(route_clearance(route, scene, options.stoplist), 1e9)},
                {"reversed", reversed}};
  return item;
}

}  // namespace bevprompt
