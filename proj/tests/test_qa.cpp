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

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "bevprompt/errors.hpp"
#include "bevprompt/qa.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bp = bevprompt;
using Eigen::Vector2d;
using Eigen::Vector3d;
using testutil::object;
using testutil::scene_of;

namespace {

bp::ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const bp::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an exception";
  return bp::ErrorKind::kEmptyInput;
}

const bp::ObjectInstance& by_id(const bp::SceneManifest& s, bp::MarkId id) { return *s.find(id); }

std::string four_way(double deg) {
  if (deg >= -45.0 && deg < 45.0) return "front";
  if (deg >= 45.0 && deg < 135.0) return "right";
  if (deg >= -135.0 && deg < -45.0) return "left";
  return "back";
}

std::string correct_text(const bp::QAItem& item) { return (*item.choices)[*item.correct_choice]; }

bp::SceneManifest rigidly_moved(const bp::SceneManifest& scene, double yaw_deg, Vector3d shift) {
  bp::SceneManifest out = scene;
  const Eigen::Matrix3d r = testutil::yaw(yaw_deg);
  for (auto& o : out.objects) {
    o.obb.center = r * o.obb.center + shift;
    o.obb.rotation = r * o.obb.rotation;
  }
  return out;
}

bp::SceneManifest unit_cubes(std::vector<std::pair<std::string, Vector3d>> placed) {
  std::vector<bp::ObjectInstance> objects;
  bp::MarkId id = 1;
  for (auto& [label, c] : placed) objects.push_back(object(id++, label, c, {1, 1, 1}));
  return scene_of(std::move(objects));
}

}  // namespace

TEST(GenCount, Examples) {
  const auto scene = scene_of({object(1, "chair", {0, 0, 0}), object(2, "chair", {2, 0, 0}), object(3, "chair", {4, 0, 0}),
                               object(4, "sofa", {0, 3, 0})});
  auto chairs = bp::gen_count(scene, "chair", 1);
  EXPECT_EQ(chairs.numeric_answer->value, 3.0);
  EXPECT_EQ(chairs.question, "How many chair(s) are there in this room?");
  EXPECT_EQ(chairs.involved_marks, (std::vector<bp::MarkId>{1, 2, 3}));
  EXPECT_EQ(bp::gen_count(scene, "sofa", 1).numeric_answer->value, 1.0);
  EXPECT_EQ(kind_of([&] { bp::gen_count(scene, "piano", 1); }), bp::ErrorKind::kLabelAbsent);
}

TEST(UnambiguousObjects, RepeatedAndStoplistedLabelsExcluded) {
  const auto scene = scene_of({object(1, "chair", {0, 0, 0}), object(2, "chair", {2, 0, 0}), object(3, "wall", {4, 0, 0}),
                               object(4, "sofa", {0, 3, 0})});
  const auto pool = bp::unambiguous_objects(scene, {});
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0]->label, "sofa");
}

TEST(GenRelativeDirection, TvFridgeSinkIsLeft) {
  const auto scene = scene_of({object(1, "tv", {0, 0, 0}), object(2, "fridge", {0, 2, 0}), object(3, "sink", {-2, 0, 0})});
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto item = bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, seed);
    if (item.trace["standing"]["mark_id"] == 1 && item.trace["facing"]["mark_id"] == 2) {
      EXPECT_DOUBLE_EQ(item.trace["angle_deg"].get<double>(), -90.0);
      EXPECT_EQ(correct_text(item), "left");
      ++matched;
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(GenRelativeDirection, CollinearAheadIsFront) {
  const auto scene = scene_of({object(1, "tv", {0, 0, 0}), object(2, "fridge", {0, 2, 0}), object(3, "sink", {0, 4, 0})});
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto item = bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, seed);
    if (item.trace["standing"]["mark_id"] == 1 && item.trace["facing"]["mark_id"] == 2) {
      EXPECT_EQ(correct_text(item), "front");
      ++matched;
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(GenRelativeDirection, TooFewObjects) {
  const auto scene = scene_of({object(1, "tv", {0, 0, 0}), object(2, "fridge", {0, 2, 0})});
  EXPECT_EQ(kind_of([&] { bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, 1); }),
            bp::ErrorKind::kNoValidTriplet);
}

TEST(GenRelativeDirection, QuadrantResamplesAxisAngles) {
  // Every triplet of a plus-shaped layout meets at multiples of 90 or 45 degrees;
  // only the 45-degree ones can be answered in the quadrant scheme.
  const auto scene = scene_of({object(1, "a", {0, 0, 0}), object(2, "b", {0, 2, 0}), object(3, "c", {2, 0, 0}),
                               object(4, "d", {0, -2, 0})});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    try {
      const auto item = bp::gen_relative_direction(scene, bp::DirectionScheme::kQuadrant, seed);
      const double angle = item.trace["angle_deg"];
      EXPECT_NE(std::fmod(std::abs(angle), 90.0), 0.0);
    } catch (const bp::Error& e) {
      EXPECT_EQ(e.kind(), bp::ErrorKind::kNoValidTriplet);
    }
  }
  const auto line = scene_of({object(1, "a", {0, 0, 0}), object(2, "b", {0, 2, 0}), object(3, "c", {0, 4, 0})});
  EXPECT_EQ(kind_of([&] { bp::gen_relative_direction(line, bp::DirectionScheme::kQuadrant, 3); }),
            bp::ErrorKind::kNoValidTriplet);
}

TEST(GenRelativeDirection, AnswersMatchIndependentAngle) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto scene = testutil::random_scene(rng, 6);
    const auto item = bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, rng());
    const Vector2d s = by_id(scene, item.trace["standing"]["mark_id"]).obb.center.head<2>();
    const Vector2d f = by_id(scene, item.trace["facing"]["mark_id"]).obb.center.head<2>();
    const Vector2d t = by_id(scene, item.trace["target"]["mark_id"]).obb.center.head<2>();
    EXPECT_EQ(correct_text(item), four_way(oracle::clockwise_degrees(f - s, t - s)));
    EXPECT_EQ(item.choices->size(), 4u);
  }
}

TEST(GenRelativeDirection, GoldInvariantUnderRigidMotion) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> yaw(-180.0, 180.0);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    const auto scene = testutil::random_scene(rng, 7);
    const std::uint64_t seed = rng();
    const auto moved = rigidly_moved(scene, yaw(rng), {shift(rng), shift(rng), shift(rng)});
    for (auto scheme : {bp::DirectionScheme::kFourWay, bp::DirectionScheme::kQuadrant}) {
      const auto a = bp::gen_relative_direction(scene, scheme, seed);
      const auto b = bp::gen_relative_direction(moved, scheme, seed);
      EXPECT_EQ(a.involved_marks, b.involved_marks);
      EXPECT_EQ(correct_text(a), correct_text(b));
    }
  }
}

TEST(GenRelativeDirection, FourWayBinsAreBalanced) {
  std::mt19937_64 rng(33);
  std::map<std::string, int> counts;
  const int total = 10000;
  for (int i = 0; i < total; ++i) {
    const auto scene = testutil::random_scene(rng, 5);
    ++counts[correct_text(bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, rng()))];
  }
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [label, n] : counts) {
    const double share = static_cast<double>(n) / total;
    EXPECT_GE(share, 0.15) << label;
    EXPECT_LE(share, 0.35) << label;
  }
}

TEST(GenRelativeDistance, ArgminOfCornerDistances) {
  // Reference cube at the origin; candidate corner distances 0.5, 2.0 and 3.1 m.
  const auto scene = unit_cubes({{"ref", {0, 0, 0}}, {"a", {1.5, 0, 0}}, {"b", {0, 3.0, 0}}, {"c", {-4.1, 0, 0}}});
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto item = bp::gen_relative_distance(scene, 3, seed);
    if (item.trace["reference"]["label"] != "ref") continue;
    ++matched;
    EXPECT_EQ(correct_text(item), "a");
    for (const auto& cand : item.trace["candidates"]) {
      EXPECT_EQ(cand["distance_m"].get<double>(),
                oracle::brute_force_corner_distance(by_id(scene, cand["mark_id"]).obb, by_id(scene, 1).obb));
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(GenRelativeDistance, FourCandidatesPickSmallest) {
  const auto scene = unit_cubes(
      {{"ref", {0, 0, 0}}, {"a", {3.2, 0, 0}}, {"b", {0, 1.9, 0}}, {"c", {-2.6, 0, 0}}, {"d", {0, -4.0, 0}}});
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    try {
      const auto item = bp::gen_relative_distance(scene, 4, seed);
      if (item.trace["reference"]["label"] != "ref") continue;
      ++matched;
      const auto& cands = item.trace["candidates"];
      std::size_t best = 0;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double d = oracle::brute_force_corner_distance(by_id(scene, cands[i]["mark_id"]).obb, by_id(scene, 1).obb);
        if (d < oracle::brute_force_corner_distance(by_id(scene, cands[best]["mark_id"]).obb, by_id(scene, 1).obb)) best = i;
      }
      EXPECT_EQ(*item.correct_choice, best);
      EXPECT_EQ(correct_text(item), "b");
    } catch (const bp::Error&) {
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(GenRelativeDistance, MarginRuleRejectsNearTies) {
  // Seen from "ref" the two nearest candidates are 1.00 and 1.05 m away.
  const auto scene = unit_cubes({{"ref", {0, 0, 0}}, {"a", {2.0, 0, 0}}, {"b", {0, -2.05, 0}}, {"c", {-6, 0, 0}}});
  bp::QaOptions one_shot;
  one_shot.max_attempts = 1;
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    try {
      const auto item = bp::gen_relative_distance(scene, 3, seed, one_shot);
      EXPECT_NE(item.trace["reference"]["label"], "ref");
    } catch (const bp::Error& e) {
      EXPECT_EQ(e.kind(), bp::ErrorKind::kNoUnambiguousReference);
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
}

TEST(GenRelativeDistance, Preconditions) {
  const auto few = unit_cubes({{"ref", {0, 0, 0}}, {"a", {3, 0, 0}}, {"b", {0, 3, 0}}});
  EXPECT_EQ(kind_of([&] { bp::gen_relative_distance(few, 3, 1); }), bp::ErrorKind::kTooFewCandidates);
  const auto dupes = unit_cubes({{"x", {0, 0, 0}}, {"x", {3, 0, 0}}});
  EXPECT_EQ(kind_of([&] { bp::gen_relative_distance(dupes, 3, 1); }), bp::ErrorKind::kNoUnambiguousReference);
}

TEST(GenAbsoluteDistance, Examples) {
  EXPECT_EQ(bp::gen_absolute_distance(unit_cubes({{"a", {0, 0, 0}}, {"b", {3, 0, 0}}}), 1).numeric_answer->value, 2.0);
  const auto diag = bp::gen_absolute_distance(unit_cubes({{"a", {0, 0, 0}}, {"b", {2, 2, 0}}}), 1);
  EXPECT_EQ(diag.numeric_answer->value, 1.41);
  EXPECT_EQ(diag.numeric_answer->unit, "m");
  EXPECT_EQ(diag.trace["distance_m"].get<double>(),
            oracle::brute_force_corner_distance(unit_cubes({{"a", {0, 0, 0}}, {"b", {2, 2, 0}}}).objects[0].obb,
                                                unit_cubes({{"a", {0, 0, 0}}, {"b", {2, 2, 0}}}).objects[1].obb));
  EXPECT_EQ(kind_of([&] { bp::gen_absolute_distance(unit_cubes({{"a", {0, 0, 0}}, {"b", {1.03, 0, 0}}}), 1); }),
            bp::ErrorKind::kNoValidPair);
}

TEST(GenAbsoluteDistance, OverlappingPairIsResampled) {
  const auto scene = unit_cubes({{"a", {0, 0, 0}}, {"b", {1.03, 0, 0}}, {"c", {5, 0, 0}}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto item = bp::gen_absolute_distance(scene, seed);
    EXPECT_GE(item.trace["distance_m"].get<double>(), 0.1);
  }
}

TEST(GenAbsoluteDistance, PreRoundedEqualsBruteForce) {
  std::mt19937_64 rng(34);
  for (int i = 0; i < 300; ++i) {
    auto scene = testutil::random_scene(rng, 2, 6.0, false);
    try {
      const auto item = bp::gen_absolute_distance(scene, rng());
      const double exact = oracle::brute_force_corner_distance(scene.objects[0].obb, scene.objects[1].obb);
      EXPECT_EQ(item.trace["distance_m"].get<double>(), exact);
      EXPECT_EQ(item.numeric_answer->value, std::round(exact * 100.0) / 100.0);
    } catch (const bp::Error& e) {
      EXPECT_EQ(e.kind(), bp::ErrorKind::kNoValidPair);
    }
  }
}

TEST(GenObjectSize, Examples) {
  auto sized = [](Vector3d extents) {
    return bp::gen_object_size(scene_of({object(1, "box", {0, 0, 0}, extents)}), 1).numeric_answer->value;
  };
  EXPECT_EQ(sized({0.5, 1.2, 0.8}), 120.0);
  EXPECT_EQ(sized({1, 1, 1}), 100.0);
  EXPECT_EQ(sized({0.33, 0.31, 0.90}), 90.0);
  EXPECT_EQ(kind_of([] { bp::gen_object_size(scene_of({object(1, "x", {0, 0, 0}), object(2, "x", {1, 0, 0})}), 1); }),
            bp::ErrorKind::kNoUnambiguousObject);
}

TEST(GenRoomSize, DenseFloor) {
  bp::PointCloud cloud;
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 500; ++j) cloud.points.emplace_back(i * 0.01 + 0.005, j * 0.01 + 0.005, 0.0);
  }
  const auto item = bp::gen_room_size(scene_of({object(1, "a", {0, 0, 0})}), cloud, 1);
  EXPECT_NEAR(item.numeric_answer->value, 20.0, 0.4);
  EXPECT_EQ(item.numeric_answer->unit, "m2");
}

TEST(GenRoomSize, SinglePointAndEmpty) {
  bp::PointCloud one;
  one.points = {{0.3, 0.3, 0.0}};
  EXPECT_DOUBLE_EQ(bp::occupied_floor_area(one, 0.05), 0.0025);
  const auto item = bp::gen_room_size(scene_of({object(1, "a", {0, 0, 0})}), one, 1);
  EXPECT_DOUBLE_EQ(item.trace["area_m2"].get<double>(), 0.0025);
  EXPECT_EQ(item.numeric_answer->value, 0.0);  // rounded to 0.1 m2
  EXPECT_EQ(kind_of([] { bp::gen_room_size(scene_of({object(1, "a", {0, 0, 0})}), bp::PointCloud{}, 1); }),
            bp::ErrorKind::kEmptyCloud);
}

TEST(DeriveActions, Examples) {
  const auto right = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {2, 2, 0}}});
  bp::RouteSpec route{{1, 2, 3}, 2, {}, 0.25};
  EXPECT_EQ(bp::derive_actions(route, right), (std::vector<bp::NavAction>{bp::NavAction::kGoForward, bp::NavAction::kTurnRight}));
  const auto left = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {-2, 2, 0}}});
  EXPECT_EQ(bp::derive_actions(route, left), (std::vector<bp::NavAction>{bp::NavAction::kGoForward, bp::NavAction::kTurnLeft}));
  const auto line = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {0, 4, 0}}});
  EXPECT_EQ(bp::derive_actions(route, line), (std::vector<bp::NavAction>{bp::NavAction::kGoForward, bp::NavAction::kGoForward}));
}

TEST(DeriveActions, ThresholdIsInclusive) {
  const double rad = 30.0 * M_PI / 180.0;
  const auto scene = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {2 * std::sin(rad), 2 + 2 * std::cos(rad), 0}}});
  bp::RouteSpec route{{1, 2, 3}, 2, {}, 0.25};
  EXPECT_EQ(bp::derive_actions(route, scene)[1], bp::NavAction::kGoForward);
  EXPECT_EQ(bp::derive_actions(route, scene, 29.0)[1], bp::NavAction::kTurnRight);
}

TEST(GenRoutePlan, BlankAtTurnIsTurnRight) {
  const auto scene = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {2, 2, 0}}});
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto item = bp::gen_route_plan(scene, seed);
    const auto& route = item.trace["route"];
    if (route["waypoints"] == nlohmann::json({1, 2, 3}) && item.trace["blank_index"] == 1) {
      EXPECT_EQ(correct_text(item), "Turn Right");
      EXPECT_NE(item.question.find("[please fill in]"), std::string::npos);
      ++matched;
    }
  }
  EXPECT_GT(matched, 0);
}

TEST(GenRoutePlan, StraightLineIsAllForward) {
  const auto scene = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {0, 4, 0}}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto route = bp::sample_route(scene, seed);
    EXPECT_EQ(route.waypoints.size(), 3u);
    const auto item = bp::gen_route_plan(scene, seed);
    if (item.trace["route"]["waypoints"] == nlohmann::json({1, 2, 3})) EXPECT_EQ(correct_text(item), "Go Forward");
  }
}

TEST(SampleRoute, BlockedEverywhere) {
  // Two identical sofas are obstacles but never waypoints; every chain crosses one.
  std::vector<bp::ObjectInstance> objects = {object(1, "A", {0, 0, 0}), object(2, "B", {0, 4, 0}), object(3, "C", {0, 8, 0}),
                                             object(4, "sofa", {0, 2, 0}, {2.0, 0.9, 0.8}),
                                             object(5, "sofa", {0, 6, 0}, {2.0, 0.9, 0.8})};
  const auto scene = scene_of(objects);
  EXPECT_EQ(kind_of([&] { bp::sample_route(scene, 1); }), bp::ErrorKind::kNoValidRoute);
  EXPECT_EQ(kind_of([&] { bp::gen_route_plan(scene, 1); }), bp::ErrorKind::kNoValidRoute);
}

TEST(SampleRoute, RandomScenesPassIndependentRecheck) {
  std::mt19937_64 rng(35);
  int produced = 0;
  for (int i = 0; i < 100; ++i) {
    const auto scene = testutil::random_scene(rng, 10);
    bp::RouteSpec route;
    try {
      route = bp::sample_route(scene, static_cast<std::uint64_t>(i));
    } catch (const bp::Error& e) {
      EXPECT_EQ(e.kind(), bp::ErrorKind::kNoValidRoute);
      continue;
    }
    ++produced;
    EXPECT_GE(route.waypoints.size(), 3u);
    EXPECT_LE(route.waypoints.size(), 5u);
    EXPECT_EQ(std::set<bp::MarkId>(route.waypoints.begin(), route.waypoints.end()).size(), route.waypoints.size());
    EXPECT_EQ(route.facing_mark, route.waypoints[1]);
    EXPECT_EQ(route.actions.size(), route.waypoints.size() - 1);
    EXPECT_GE(oracle::route_clearance(scene, route.waypoints, bp::QaOptions{}.stoplist), route.clearance_m);
    for (std::size_t k = 0; k + 1 < route.waypoints.size(); ++k) {
      const Vector2d a = by_id(scene, route.waypoints[k]).obb.center.head<2>();
      const Vector2d b = by_id(scene, route.waypoints[k + 1]).obb.center.head<2>();
      EXPECT_GE((a - b).norm(), 0.8);
    }
  }
  EXPECT_GT(produced, 80);
}

TEST(GenRoutePlan, RegeneratedActionMatchesCorrectChoice) {
  std::mt19937_64 rng(36);
  for (bool reversal : {false, true}) {
    bp::QaOptions options;
    options.route_reversal = reversal;
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      const auto scene = testutil::random_scene(rng, 9);
      bp::QAItem item;
      try {
        item = bp::gen_route_plan(scene, rng(), options);
      } catch (const bp::Error&) {
        continue;
      }
      ++checked;
      std::vector<Vector2d> centers;
      for (const auto& id : item.trace["route"]["waypoints"]) centers.push_back(by_id(scene, id).obb.center.head<2>());
      const Vector2d facing = by_id(scene, item.trace["route"]["facing_mark"]).obb.center.head<2>();
      const auto actions = oracle::route_actions(centers, facing, 30.0);
      EXPECT_EQ(correct_text(item), actions[item.trace["blank_index"].get<std::size_t>()]);
      EXPECT_EQ(item.trace["route"]["actions"], nlohmann::json(actions));
      EXPECT_EQ(item.choices->size(), 3u);
    }
    EXPECT_GT(checked, 80);
  }
}

TEST(ReverseRoute, RecomputesActions) {
  const auto scene = unit_cubes({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}, {"C", {2, 2, 0}}});
  const bp::RouteSpec route{{1, 2, 3}, 2, {bp::NavAction::kGoForward, bp::NavAction::kTurnRight}, 0.25};
  const auto back = bp::reverse_route(route, scene);
  EXPECT_EQ(back.waypoints, (std::vector<bp::MarkId>{3, 2, 1}));
  EXPECT_EQ(back.facing_mark, 2u);
  EXPECT_EQ(back.actions, (std::vector<bp::NavAction>{bp::NavAction::kGoForward, bp::NavAction::kTurnLeft}));
}

TEST(GenerateItem, DeterministicAndIdentified) {
  std::mt19937_64 rng(37);
  const auto scene = testutil::random_scene(rng, 8);
  bp::PointCloud cloud;
  for (int i = 0; i < 100; ++i) cloud.points.emplace_back(i * 0.1, 0.0, 0.0);
  for (auto category : bp::generated_categories()) {
    for (std::uint64_t index = 0; index < 3; ++index) {
      const auto a = bp::generate_item(category, scene, &cloud, 7, index);
      const auto b = bp::generate_item(category, scene, &cloud, 7, index);
      EXPECT_EQ(a, b);
      EXPECT_EQ(bp::serialize_shard({a}), bp::serialize_shard({b}));
      char suffix[8];
      std::snprintf(suffix, sizeof suffix, "%04llu", static_cast<unsigned long long>(index));
      EXPECT_EQ(a.qa_id, "random-" + std::string(bp::category_name(category)) + "-" + suffix);
      EXPECT_NO_THROW(bp::validate_item(a, &scene));
      if (a.answer_kind == bp::AnswerKind::kChoice) {
        EXPECT_LT(*a.correct_choice, a.choices->size());
      } else {
        EXPECT_TRUE(std::isfinite(a.numeric_answer->value));
        EXPECT_GE(a.numeric_answer->value, 0.0);
      }
    }
  }
  EXPECT_THROW(bp::generate_item(bp::QaCategory::kObjAttribute, scene, &cloud, 7, 0), bp::Error);
}

TEST(DeriveSeed, SeparatesStreams) {
  const auto a = bp::derive_seed(7, "s", bp::QaCategory::kCount, 0);
  EXPECT_EQ(a, bp::derive_seed(7, "s", bp::QaCategory::kCount, 0));
  EXPECT_NE(a, bp::derive_seed(7, "s", bp::QaCategory::kCount, 1));
  EXPECT_NE(a, bp::derive_seed(7, "s", bp::QaCategory::kRoutePlan, 0));
  EXPECT_NE(a, bp::derive_seed(7, "t", bp::QaCategory::kCount, 0));
  EXPECT_NE(a, bp::derive_seed(8, "s", bp::QaCategory::kCount, 0));
}

TEST(ValidateItem, RejectsInconsistentAnswers) {
  const auto scene = unit_cubes({{"a", {0, 0, 0}}, {"b", {3, 0, 0}}});
  auto item = bp::gen_absolute_distance(scene, 1);
  auto bad = item;
  bad.numeric_answer->value = -1.0;
  EXPECT_THROW(bp::validate_item(bad), bp::Error);
  bad = item;
  bad.choices = std::vector<std::string>{"x"};
  EXPECT_THROW(bp::validate_item(bad), bp::Error);
  bad = item;
  bad.involved_marks.push_back(42);
  EXPECT_THROW(bp::validate_item(bad, &scene), bp::Error);
}

TEST(Shards, RoundTripAndImport) {
  testutil::TempDir dir;
  std::mt19937_64 rng(38);
  const auto scene = testutil::random_scene(rng, 8);
  std::vector<bp::QAItem> items;
  for (auto category : {bp::QaCategory::kCount, bp::QaCategory::kRelDirection, bp::QaCategory::kAbsDistance,
                        bp::QaCategory::kRoutePlan}) {
    items.push_back(bp::generate_item(category, scene, nullptr, 3, 0));
  }
  bp::write_shard(dir / "qa.jsonl", items);
  EXPECT_EQ(bp::read_shard(dir / "qa.jsonl"), items);
  EXPECT_EQ(bp::import_shard(dir / "qa.jsonl", scene), items);
  auto other = scene;
  other.scene_id = "elsewhere";
  EXPECT_THROW(bp::import_shard(dir / "qa.jsonl", other), bp::Error);

  std::ofstream(dir / "bad.jsonl") << bp::qa_item_to_json(items[0]).dump() << "\n{broken\n";
  try {
    bp::read_shard(dir / "bad.jsonl");
    FAIL();
  } catch (const bp::Error& e) {
    EXPECT_EQ(e.kind(), bp::ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Shards, ImportedAttributeItem) {
  testutil::TempDir dir;
  const auto scene = unit_cubes({{"lamp", {0, 0, 0}}, {"desk", {3, 0, 0}}});
  bp::QAItem item;
  item.qa_id = "scene-obj_attribute-0001";
  item.scene_id = "scene";
  item.category = bp::QaCategory::kObjAttribute;
  item.question = "What color is the lamp [1]?";
  item.answer_kind = bp::AnswerKind::kChoice;
  item.choices = std::vector<std::string>{"red", "blue"};
  item.correct_choice = 1;
  item.involved_marks = {1};
  bp::write_shard(dir / "ext.jsonl", {item});
  EXPECT_EQ(bp::import_shard(dir / "ext.jsonl", scene), std::vector<bp::QAItem>{item});
}

TEST(AugmentationStub, CarriesTemplateAndGold) {
  const auto scene = scene_of({object(1, "chair", {0, 0, 0}), object(2, "chair", {2, 0, 0}), object(3, "tv", {0, 3, 0}),
                               object(4, "fridge", {3, 3, 0}), object(5, "sink", {-3, 1, 0})});
  const auto count = bp::gen_count(scene, "chair", 1);
  const auto stub = bp::emit_augmentation_stub(count);
  EXPECT_NE(stub.find(count.question), std::string::npos);
  EXPECT_NE(stub.find("2"), std::string::npos);
  EXPECT_NE(stub.find("<answer>"), std::string::npos);

  const auto dir = bp::gen_relative_direction(scene, bp::DirectionScheme::kFourWay, 4);
  const auto dstub = bp::emit_augmentation_stub(dir);
  for (const char* role : {"standing", "facing", "target"}) {
    EXPECT_NE(dstub.find(dir.trace[role]["label"].get<std::string>()), std::string::npos) << role;
  }
  EXPECT_NE(dstub.find(correct_text(dir)), std::string::npos);

  const auto route = bp::gen_route_plan(scene, 5);
  const auto rstub = bp::emit_augmentation_stub(route);
  for (const auto& ref : route.trace["waypoint_labels"]) EXPECT_NE(rstub.find(ref["label"].get<std::string>()), std::string::npos);
  for (const auto& a : route.trace["route"]["actions"]) EXPECT_NE(rstub.find(a.get<std::string>()), std::string::npos);
}
