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


#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "bevprompt/eval.hpp"
#include "bevprompt/qa.hpp"
#include "cli/cli.hpp"
#include "test_util.hpp"

namespace bp = bevprompt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "--quiet");
  return bp::cli::run_cli(args);
}

// One synthesized scene plus a completed pipeline run, shared by the tests below.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir("bevprompt-cli");
    ASSERT_EQ(cli({"synth", "--dir", (dir_->path() / "scenes").string()}), bp::cli::kExitOk);
    ASSERT_EQ(cli({"--scene", scenes().string(), "--out", out().string(), "pipeline"}), bp::cli::kExitOk);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path scenes() { return dir_->path() / "scenes"; }
  static fs::path out() { return dir_->path() / "out"; }
  static fs::path scene_out() { return out() / "synthetic_room"; }

  static testutil::TempDir* dir_;
};

testutil::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST_F(CliPipeline, PipelineWritesEveryStage) {
  for (const char* stage : {"ingest", "render", "keyframes", "genqa", "bundle"}) {
    EXPECT_TRUE(fs::is_directory(scene_out() / stage)) << stage;
  }
  EXPECT_TRUE(fs::exists(scene_out() / "render" / "bev.png"));
  const auto items = bp::read_shard(scene_out() / "genqa" / "qa.jsonl");
  ASSERT_FALSE(items.empty());
  const auto index = nlohmann::json::parse(slurp(scene_out() / "bundle" / "index.json"));
  EXPECT_EQ(index.at("bundles").size(), items.size());
  for (const auto& item : items) {
    const auto bundle = nlohmann::json::parse(slurp(scene_out() / "bundle" / (item.qa_id + ".json")));
    ASSERT_EQ(bundle.at("images").size(), 1u) << item.qa_id;
    EXPECT_TRUE(fs::exists(out() / bundle.at("images")[0].at("path").get<std::string>()));
  }
}

TEST_F(CliPipeline, GenqaIsDeterministicForASeed) {
  std::vector<std::string> shards;
  for (const char* run : {"a", "b"}) {
    const fs::path dest = dir_->path() / (std::string("genqa_") + run);
    fs::copy(out(), dest, fs::copy_options::recursive);
    ASSERT_EQ(cli({"--scene", scenes().string(), "--out", dest.string(), "genqa", "--force", "--category",
                   "rel_direction", "--seed", "7"}),
              bp::cli::kExitOk);
    shards.push_back(slurp(dest / "synthetic_room" / "genqa" / "qa.jsonl"));
  }
  ASSERT_FALSE(shards[0].empty());
  EXPECT_EQ(shards[0], shards[1]);
  for (const auto& item : bp::read_shard(dir_->path() / "genqa_a" / "synthetic_room" / "genqa" / "qa.jsonl")) {
    EXPECT_EQ(item.category, bp::QaCategory::kRelDirection);
  }

  const fs::path other = dir_->path() / "genqa_c";
  fs::copy(out(), other, fs::copy_options::recursive);
  ASSERT_EQ(cli({"--scene", scenes().string(), "--out", other.string(), "genqa", "--force", "--category",
                 "rel_direction", "--seed", "8"}),
            bp::cli::kExitOk);
  EXPECT_NE(slurp(other / "synthetic_room" / "genqa" / "qa.jsonl"), shards[0]);
}

TEST_F(CliPipeline, MissingBevFailsAndNamesScene) {
  const fs::path copy = dir_->path() / "broken";
  fs::copy(out(), copy, fs::copy_options::recursive);
  fs::remove(copy / "synthetic_room" / "render" / "bev.png");
  testing::internal::CaptureStderr();
  const int code = bp::cli::run_cli({"--scene", scenes().string(), "--out", copy.string(), "bundle", "--force"});
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(code, bp::cli::kExitOk);
  EXPECT_NE(err.find("synthetic_room"), std::string::npos) << err;
  EXPECT_NE(err.find("bev.png"), std::string::npos) << err;
}

TEST_F(CliPipeline, EvalReportMatchesAggregateOracle) {
  const auto items = bp::read_shard(scene_out() / "genqa" / "qa.jsonl");
  // Alternate right and wrong answers; every score is exactly 0 or 1 by construction.
  std::map<bp::QaCategory, std::pair<double, int>> by_category;
  const fs::path log = dir_->path() / "fake_responses.jsonl";
  {
    std::ofstream out(log);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      const bool right = i % 2 == 0;
      std::string text;
      if (item.answer_kind == bp::AnswerKind::kChoice) {
        const std::size_t pick = right ? *item.correct_choice : (*item.correct_choice + 1) % item.choices->size();
        text = std::string("<answer>") + static_cast<char>('A' + pick) + "</answer>";
      } else {
        const double gold = item.numeric_answer->value;
        const double value = right ? gold : (gold == 0.0 ? 5.0 : gold * 3.0);
        text = "<answer>" + nlohmann::json(value).dump() + "</answer>";
      }
      bp::ModelResponse r;
      r.qa_id = item.qa_id;
      r.raw_text = text;
      r.attempt_count = 1;
      out << bp::response_to_json(r).dump() << '\n';
      auto& [sum, count] = by_category[item.category];
      sum += right ? 1.0 : 0.0;
      ++count;
    }
  }
  double expected = 0.0;
  for (const auto& [category, acc] : by_category) expected += acc.first / acc.second * 100.0;
  expected /= static_cast<double>(by_category.size());

  const fs::path report_path = dir_->path() / "report.json";
  const fs::path table_path = dir_->path() / "report.txt";
  ASSERT_EQ(cli({"--scene", scenes().string(), "--out", out().string(), "eval", "--responses", log.string(), "--report",
                 report_path.string(), "--table", table_path.string()}),
            bp::cli::kExitOk);
  const auto report = bp::report_from_json(nlohmann::json::parse(slurp(report_path)));
  EXPECT_NEAR(report.overall, expected, 1e-9);
  EXPECT_EQ(report.per_item.size(), items.size());
  EXPECT_EQ(report.per_category.size(), by_category.size());
  EXPECT_NE(slurp(table_path).find("Avg."), std::string::npos);
}

TEST_F(CliPipeline, RerunSkipsUpToDateStages) {
  const auto before = fs::last_write_time(scene_out() / "render" / "bev.png");
  ASSERT_EQ(cli({"--scene", scenes().string(), "--out", out().string(), "pipeline"}), bp::cli::kExitOk);
  EXPECT_EQ(fs::last_write_time(scene_out() / "render" / "bev.png"), before);
}

TEST(Cli, UsageErrorsAreValidationFailures) {
  testing::internal::CaptureStderr();
  EXPECT_EQ(bp::cli::run_cli({}), bp::cli::kExitValidation);
  EXPECT_EQ(bp::cli::run_cli({"nonsense"}), bp::cli::kExitValidation);
  EXPECT_EQ(bp::cli::run_cli({"synth"}), bp::cli::kExitValidation);
  testing::internal::GetCapturedStderr();
}

// An unreadable input path is an I/O failure, reported with the runtime exit code.
TEST(Cli, MissingSceneIsRuntimeFailure) {
  testutil::TempDir dir;
  testing::internal::CaptureStderr();
  const int code = bp::cli::run_cli({"--scene", (dir / "nope").string(), "--out", (dir / "out").string(), "ingest"});
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, bp::cli::kExitRuntime);
}

TEST(Cli, GatewayConfigWithKeyIsRejected) {
  testutil::TempDir dir;
  ASSERT_EQ(cli({"synth", "--dir", (dir / "scenes").string()}), bp::cli::kExitOk);
  ASSERT_EQ(cli({"--scene", (dir / "scenes").string(), "--out", (dir / "out").string(), "pipeline"}), bp::cli::kExitOk);
  {
    std::ofstream out(dir / "gateway.json");
    out << R"({"endpoint": "http://127.0.0.1:9/v1", "model": "m", "api_key": "sk-in-a-file"})";
  }
  testing::internal::CaptureStderr();
  const int code = bp::cli::run_cli({"--scene", (dir / "scenes").string(), "--out", (dir / "out").string(), "dispatch",
                                     "--gateway", (dir / "gateway.json").string()});
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, bp::cli::kExitValidation);
  EXPECT_EQ(err.find("sk-in-a-file"), std::string::npos);
}
