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
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bevprompt/errors.hpp"
#include "bevprompt/eval.hpp"
#include "oracles.hpp"

namespace bp = bevprompt;

namespace {

bp::QAItem choice_item(std::vector<std::string> choices, std::size_t correct) {
  bp::QAItem item;
  item.qa_id = "s-route-0000";
  item.category = bp::QaCategory::kRoutePlan;
  item.answer_kind = bp::AnswerKind::kChoice;
  item.choices = std::move(choices);
  item.correct_choice = correct;
  return item;
}

bp::QAItem numeric_item(double gold, std::string unit = "m", bp::QaCategory category = bp::QaCategory::kAbsDistance) {
  bp::QAItem item;
  item.qa_id = "s-abs-0000";
  item.category = category;
  item.answer_kind = bp::AnswerKind::kNumeric;
  item.numeric_answer = bp::NumericAnswer{gold, std::move(unit)};
  return item;
}

bp::ParsedAnswer numeric(double v) { return {bp::ParsedKind::kNumeric, std::nullopt, v}; }

}  // namespace

TEST(ParseAnswer, TaggedChoice) {
  const auto p = bp::parse_answer("<think>the sofa is behind me</think><answer>B</answer>", bp::AnswerKind::kChoice);
  ASSERT_EQ(p.kind, bp::ParsedKind::kChoice);
  EXPECT_EQ(*p.choice_text, "B");
}

TEST(ParseAnswer, LastNumberWithUnit) {
  auto p = bp::parse_answer("approximately 3.5 meters", bp::AnswerKind::kNumeric);
  ASSERT_EQ(p.kind, bp::ParsedKind::kNumeric);
  EXPECT_DOUBLE_EQ(*p.value, 3.5);
  p = bp::parse_answer("between 2 and 4, say 3 m", bp::AnswerKind::kNumeric);
  EXPECT_DOUBLE_EQ(*p.value, 3.0);
}

TEST(ParseAnswer, Unparseable) {
  EXPECT_EQ(bp::parse_answer("I cannot tell", bp::AnswerKind::kNumeric).kind, bp::ParsedKind::kUnparseable);
  EXPECT_EQ(bp::parse_answer("", bp::AnswerKind::kChoice).kind, bp::ParsedKind::kUnparseable);
  EXPECT_EQ(bp::parse_answer("<answer></answer>", bp::AnswerKind::kNumeric).kind, bp::ParsedKind::kUnparseable);
}

TEST(ParseAnswer, CentimetresConvertToQuestionUnit) {
  EXPECT_DOUBLE_EQ(*bp::parse_answer("<answer>150 cm</answer>", bp::AnswerKind::kNumeric, "m").value, 1.5);
  EXPECT_DOUBLE_EQ(*bp::parse_answer("<answer>1.5 m</answer>", bp::AnswerKind::kNumeric, "cm").value, 150.0);
  EXPECT_DOUBLE_EQ(*bp::parse_answer("about 12.5 m²", bp::AnswerKind::kNumeric, "m²").value, 12.5);
}

TEST(ParseAnswer, TagWinsOverReasoning) {
  const auto p = bp::parse_answer("<think>A is wrong, C is also wrong</think><answer>D</answer>", bp::AnswerKind::kChoice);
  EXPECT_EQ(*p.choice_text, "D");
  const auto n = bp::parse_answer("<think>maybe 9 or 10</think><answer>4.2</answer>", bp::AnswerKind::kNumeric);
  EXPECT_DOUBLE_EQ(*n.value, 4.2);
}

TEST(ParseAnswer, NeverThrowsOnArbitraryText) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "<>/answerthink0123456789.-+eE ABCDm²cm\n\t()";
  for (int i = 0; i < 5000; ++i) {
    std::string s(rng() % 80, ' ');
    for (auto& c : s) c = (rng() % 7 == 0) ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    for (auto kind : {bp::AnswerKind::kChoice, bp::AnswerKind::kNumeric}) {
      bp::ParsedAnswer p;
      EXPECT_NO_THROW(p = bp::parse_answer(s, kind, "m"));
      if (p.kind == bp::ParsedKind::kNumeric) EXPECT_TRUE(std::isfinite(*p.value));
    }
  }
}

TEST(ScoreChoice, LetterAndFullText) {
  const auto item = choice_item({"Go Forward", "Turn Right", "Turn Left"}, 1);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("b", bp::AnswerKind::kChoice), item), 1.0);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("<answer>B</answer>", bp::AnswerKind::kChoice), item), 1.0);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("turn right", bp::AnswerKind::kChoice), item), 1.0);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("  Turn Right. ", bp::AnswerKind::kChoice), item), 1.0);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("A", bp::AnswerKind::kChoice), item), 0.0);
  EXPECT_EQ(bp::score_choice(bp::parse_answer("turn left", bp::AnswerKind::kChoice), item), 0.0);
  EXPECT_EQ(bp::score_choice(bp::ParsedAnswer{}, item), 0.0);
}

TEST(Mra, ReferenceValues) {
  EXPECT_EQ(bp::mean_relative_accuracy(10.0, 10.0), 1.0);
  EXPECT_EQ(bp::mean_relative_accuracy(12.0, 10.0), 0.6);
  EXPECT_EQ(bp::mean_relative_accuracy(30.0, 10.0), 0.0);
  EXPECT_EQ(bp::mean_relative_accuracy(0.0, 0.0), 1.0);
  EXPECT_EQ(bp::mean_relative_accuracy(0.1, 0.0), 0.0);
  EXPECT_EQ(bp::score_numeric_mra(numeric(12.0), numeric_item(10.0)), 0.6);
  EXPECT_EQ(bp::score_numeric_mra(bp::ParsedAnswer{}, numeric_item(10.0)), 0.0);
}

TEST(Mra, MatchesDefinitionOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gold(0.1, 20.0), scale(0.0, 2.5);
  for (int i = 0; i < 20000; ++i) {
    const double g = gold(rng);
    const double p = g * scale(rng);
    EXPECT_EQ(bp::mean_relative_accuracy(p, g), oracle::mra(p, g)) << p << " vs " << g;
  }
}

TEST(Mra, MonotoneInAbsoluteError) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> gold(0.1, 20.0), err(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double g = gold(rng);
    double e1 = err(rng) * g, e2 = err(rng) * g;
    if (e1 > e2) std::swap(e1, e2);
    EXPECT_GE(bp::mean_relative_accuracy(g + e1, g), bp::mean_relative_accuracy(g + e2, g));
    EXPECT_GE(bp::mean_relative_accuracy(g - e1, g), bp::mean_relative_accuracy(g - e2, g));
  }
}

TEST(Aggregate, UnweightedCategoryMean) {
  std::vector<bp::ScoredItem> items = {{"a", bp::QaCategory::kRelDirection, 1.0},
                                       {"b", bp::QaCategory::kRelDirection, 0.0},
                                       {"c", bp::QaCategory::kRoutePlan, 1.0},
                                       {"d", bp::QaCategory::kRoutePlan, 1.0},
                                       {"e", bp::QaCategory::kRoutePlan, 0.0},
                                       {"f", bp::QaCategory::kRoutePlan, 1.0},
                                       {"g", bp::QaCategory::kRoutePlan, 0.5}};
  // Category means 50 and 70.
  const auto report = bp::aggregate(items);
  ASSERT_EQ(report.per_category.size(), 2u);
  EXPECT_NEAR(report.overall, 60.0, 1e-9);
  const auto weighted = bp::aggregate(items, true);
  EXPECT_NEAR(weighted.overall, 4.5 / 7.0 * 100.0, 1e-9);
}

TEST(Aggregate, SingleCategory) {
  const auto report = bp::aggregate({{"a", bp::QaCategory::kObjSize, 0.833}});
  EXPECT_NEAR(report.overall, 83.3, 1e-9);
}

TEST(Aggregate, EmptyInputThrows) {
  try {
    bp::aggregate({});
    FAIL();
  } catch (const bp::Error& e) {
    EXPECT_EQ(e.kind(), bp::ErrorKind::kEmptyInput);
  }
}

TEST(Aggregate, RecomputedFromItems) {
  std::mt19937_64 rng(3);
  const std::vector<bp::QaCategory> cats = {bp::QaCategory::kRelDirection, bp::QaCategory::kAbsDistance,
                                            bp::QaCategory::kRoomSize, bp::QaCategory::kRoutePlan,
                                            bp::QaCategory::kObjSize};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<bp::ScoredItem> items;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      items.push_back({"q" + std::to_string(i), cats[rng() % cats.size()], static_cast<double>(rng() % 11) / 10.0});
    }
    const auto report = bp::aggregate(items);
    double mean_of_means = 0.0;
    for (const auto& [cat, mean] : report.per_category) {
      double sum = 0.0;
      int count = 0;
      for (const auto& it : items) {
        if (it.category == cat) {
          sum += it.score;
          ++count;
        }
      }
      ASSERT_GT(count, 0);
      EXPECT_NEAR(mean, sum / count * 100.0, 1e-9);
      mean_of_means += mean;
    }
    EXPECT_NEAR(report.overall, mean_of_means / report.per_category.size(), 1e-9);
  }
}

TEST(Aggregate, CategoryOrderIsStable) {
  const auto a = bp::aggregate({{"x", bp::QaCategory::kRoutePlan, 1.0}, {"y", bp::QaCategory::kRelDirection, 0.0}});
  const auto b = bp::aggregate({{"y", bp::QaCategory::kRelDirection, 0.0}, {"x", bp::QaCategory::kRoutePlan, 1.0}});
  ASSERT_EQ(a.per_category.size(), b.per_category.size());
  for (std::size_t i = 0; i < a.per_category.size(); ++i) EXPECT_EQ(a.per_category[i], b.per_category[i]);
}

TEST(ScoreItems, MissingAndFailedResponsesScoreZero) {
  auto route = choice_item({"Go Forward", "Turn Right"}, 1);
  route.qa_id = "r";
  auto dist = numeric_item(2.0);
  dist.qa_id = "d";
  auto size = numeric_item(1.0, "cm", bp::QaCategory::kObjSize);
  size.qa_id = "s";
  bp::ModelResponse r1{"r", std::string("<answer>B</answer>")};
  bp::ModelResponse r2{"d"};
  r2.error = "HTTP 500";
  const auto scored = bp::score_items({route, dist, size}, {r1, r2});
  ASSERT_EQ(scored.size(), 3u);
  EXPECT_EQ(scored[0].score, 1.0);
  EXPECT_EQ(scored[1].score, 0.0);
  EXPECT_EQ(scored[2].score, 0.0);
}

TEST(Report, JsonRoundTripAndTable) {
  const auto report = bp::aggregate({{"a", bp::QaCategory::kRelDirection, 1.0},
                                     {"b", bp::QaCategory::kAbsDistance, 0.6},
                                     {"c", bp::QaCategory::kAbsDistance, 0.2}});
  EXPECT_EQ(bp::report_from_json(bp::report_to_json(report)), report);
  const auto table = bp::report_table(report);
  EXPECT_NE(table.find("Avg."), std::string::npos);
  EXPECT_NE(table.find("70.0"), std::string::npos);
  EXPECT_NE(table.find("40.0"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  try {
    bp::report_from_json(nlohmann::json::object());
    FAIL();
  } catch (const bp::Error& e) {
    EXPECT_EQ(e.kind(), bp::ErrorKind::kParse);
  }
}
