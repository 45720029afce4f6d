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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/gateway.hpp"
#include "bevprompt/qa.hpp"

namespace bevprompt {

enum class ParsedKind { kChoice, kNumeric, kUnparseable };

struct ParsedAnswer {
  ParsedKind kind = ParsedKind::kUnparseable;
  std::optional<std::string> choice_text;
  std::optional<double> value;
};

/// Total: never throws. Uses the last <answer>...</answer> span when present,
/// otherwise the last standalone option letter (A-H) or the last number.
/// `target_unit` ("m" or "cm") converts answers stated in the other unit.
ParsedAnswer parse_answer(std::string_view raw, AnswerKind expected, std::string_view target_unit = "");

double score_choice(const ParsedAnswer& parsed, const QAItem& item);
/// Mean relative accuracy over confidence thresholds 0.50, 0.55, ..., 0.95.
double score_numeric_mra(const ParsedAnswer& parsed, const QAItem& item);
double mean_relative_accuracy(double prediction, double gold);

struct ScoredItem {
  std::string qa_id;
  QaCategory category = QaCategory::kCount;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

struct EvalReport {
  std::vector<ScoredItem> per_item;
  /// Category name -> mean score x100, in report column order.
  std::vector<std::pair<QaCategory, double>> per_category;
  double overall = 0.0;
  bool weighted = false;

  bool operator==(const EvalReport&) const = default;
};

/// Per-category means x100 and their unweighted mean (item-weighted when
/// `weighted`). Throws EmptyInput on no items.
EvalReport aggregate(const std::vector<ScoredItem>& items, bool weighted = false);

/// Scores every item; items without a successful response score 0.
std::vector<ScoredItem> score_items(const std::vector<QAItem>& items, const std::vector<ModelResponse>& responses);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);
/// Aligned plain-text table with one column per category plus Avg.
std::string report_table(const EvalReport& report);

}  // namespace bevprompt
