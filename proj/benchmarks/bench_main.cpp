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


#include <random>
#include <span>
#include <vector>

#include <Eigen/Geometry>
#include <benchmark/benchmark.h>

#include "bevprompt/bev.hpp"
#include "bevprompt/eval.hpp"
#include "bevprompt/geometry.hpp"
#include "bevprompt/keyframes.hpp"

namespace bp = bevprompt;

namespace {

bp::OrientedBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0), ext(0.1, 2.0), yaw(-3.14159, 3.14159);
  bp::OrientedBox box;
  box.center = {pos(rng), pos(rng), pos(rng)};
  box.extents = {ext(rng), ext(rng), ext(rng)};
  box.rotation = Eigen::AngleAxisd(yaw(rng), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return box;
}

void BM_MinCornerDistance(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<bp::OrientedBox> boxes;
  for (int i = 0; i < 256; ++i) boxes.push_back(random_box(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bp::min_corner_distance(boxes[i % 256], boxes[(i + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_MinCornerDistance);

void BM_RenderBev(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> xy(0.0, 8.0), z(0.0, 2.5);
  bp::PointCloud cloud;
  for (int i = 0; i < state.range(0); ++i) cloud.points.emplace_back(xy(rng), xy(rng), z(rng));
  for (auto _ : state) benchmark::DoNotOptimize(bp::render_bev(cloud, 30.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderBev)->Arg(10'000)->Arg(250'000)->Unit(benchmark::kMillisecond);

void BM_FirstFitCover(benchmark::State& state) {
  const std::size_t frames = 32;
  const auto objects_n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::bernoulli_distribution seen(0.15);
  std::vector<std::vector<bool>> matrix(frames, std::vector<bool>(objects_n));
  for (auto& row : matrix) {
    for (std::size_t k = 0; k < objects_n; ++k) row[k] = seen(rng);
  }
  std::vector<bp::MarkId> ids(objects_n);
  for (std::size_t k = 0; k < objects_n; ++k) ids[k] = static_cast<bp::MarkId>(k + 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bp::first_fit_cover(frames, std::span<const bp::MarkId>(ids),
                                                 [&](std::size_t f, bp::MarkId id) { return matrix[f][id - 1]; }));
  }
}
BENCHMARK(BM_FirstFitCover)->Arg(16)->Arg(128);

void BM_ParseAnswer(benchmark::State& state) {
  const std::string choice =
      "<think>The fridge is ahead of me and the sink is to the right of the fridge, so option C fits.</think>"
      "<answer>C</answer>";
  const std::string numeric = "Looking at the marks, the table spans about 120 cm, so roughly 1.2 meters.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(bp::parse_answer(choice, bp::AnswerKind::kChoice));
    benchmark::DoNotOptimize(bp::parse_answer(numeric, bp::AnswerKind::kNumeric, "m"));
  }
}
BENCHMARK(BM_ParseAnswer);

}  // namespace

BENCHMARK_MAIN();
