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
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <unordered_map>

#include "bevprompt/errors.hpp"
#include "bevprompt/eval.hpp"

namespace bevprompt {
namespace {

constexpr std::array<double, 10> kRelativeErrorBounds = {0.50, 0.45, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15, 0.10, 0.05};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Returns the text the answer should be read from and whether it came from answer tags.
std::pair<std::string, bool> answer_scope(std::string_view raw) {
  const std::string_view open = "<answer>";
  const std::string_view close = "</answer>";
  const auto start = raw.rfind(open);
  if (start != std::string_view::npos) {
    const auto body = start + open.size();
    const auto end = raw.find(close, body);
    return {trim(raw.substr(body, end == std::string_view::npos ? std::string_view::npos : end - body)), true};
  }
  const auto think_end = raw.rfind("</think>");
  if (think_end != std::string_view::npos) {
    std::string after = trim(raw.substr(think_end + 8));
    if (!after.empty()) return {after, false};
  }
  return {trim(raw), false};
}

// "B", "(b)", "C." or "B. Turn Right"; a bare lowercase word such as "a chair" is not an option.
std::optional<char> lone_letter(const std::string& text) {
  static const std::regex bare(R"(^\(?([A-Ha-h])\)?[\.:]?$)");
  static const std::regex labelled(R"(^\(?([A-H])[\.\):]\s+.*$)");
  std::smatch m;
  if (std::regex_match(text, m, bare) || std::regex_match(text, m, labelled)) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
  }
  return std::nullopt;
}

ParsedAnswer parse_choice(const std::string& scope, bool tagged) {
  ParsedAnswer out;
  if (scope.empty()) return out;
  if (auto letter = lone_letter(scope)) {
    out.kind = ParsedKind::kChoice;
    out.choice_text = std::string(1, *letter);
    return out;
  }
  if (!tagged) {
    static const std::regex standalone(R"((?:^|[^A-Za-z0-9])([A-H])(?=$|[^A-Za-z0-9]))");
    std::optional<char> last;
    for (auto it = std::sregex_iterator(scope.begin(), scope.end(), standalone); it != std::sregex_iterator(); ++it) {
      last = (*it)[1].str()[0];
    }
    if (last) {
      out.kind = ParsedKind::kChoice;
      out.choice_text = std::string(1, *last);
      return out;
    }
    if (scope.size() > 64) return out;
  }
  out.kind = ParsedKind::kChoice;
  std::string text = scope;
  while (!text.empty() && (text.back() == '.' || text.back() == '!')) text.pop_back();
  out.choice_text = trim(text);
  return out;
}

ParsedAnswer parse_numeric(const std::string& scope, std::string_view target_unit) {
  static const std::regex number(R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(square\s+meters?|sq\.?\s*m|m²|m\^2|m2|centimeters?|centimetres?|cm|meters?|metres?|m)?(?![A-Za-z]))");
  ParsedAnswer out;
  std::smatch last;
  bool found = false;
  for (auto it = std::sregex_iterator(scope.begin(), scope.end(), number); it != std::sregex_iterator(); ++it) {
    last = *it;
    found = true;
  }
  if (!found) return out;
  double value = std::strtod(last[1].str().c_str(), nullptr);
  if (!std::isfinite(value)) return out;
  const std::string unit = last[2].matched ? lower(last[2].str()) : std::string();
  const bool said_cm = unit.rfind("c", 0) == 0;
  const bool said_m = !unit.empty() && !said_cm && unit.find('2') == std::string::npos && unit.find("²") == std::string::npos &&
                      unit.find("sq") == std::string::npos;
  if (target_unit == "m" && said_cm) value /= 100.0;
  if (target_unit == "cm" && said_m) value *= 100.0;
  out.kind = ParsedKind::kNumeric;
  out.value = value;
  return out;
}

}  // namespace

ParsedAnswer parse_answer(std::string_view raw, AnswerKind expected, std::string_view target_unit) {
  try {
    auto [scope, tagged] = answer_scope(raw);
    return expected == AnswerKind::kChoice ? parse_choice(scope, tagged) : parse_numeric(scope, target_unit);
  } catch (...) {
    return {};
  }
}

double score_choice(const ParsedAnswer& parsed, const QAItem& item) {
  if (parsed.kind != ParsedKind::kChoice || !parsed.choice_text || !item.choices || !item.correct_choice) return 0.0;
  const std::size_t correct = *item.correct_choice;
  if (correct >= item.choices->size()) return 0.0;
  const std::string given = lower(trim(*parsed.choice_text));
  if (given.size() == 1 && given[0] >= 'a' && given[0] <= 'h') {
    return static_cast<std::size_t>(given[0] - 'a') == correct ? 1.0 : 0.0;
  }
  return given == lower(trim((*item.choices)[correct])) ? 1.0 : 0.0;
}

double mean_relative_accuracy(double prediction, double gold) {
  if (!std::isfinite(prediction)) return 0.0;
  if (gold == 0.0) return prediction == 0.0 ? 1.0 : 0.0;
  const double relative_error = std::abs(prediction - gold) / std::abs(gold);
  int passed = 0;
  for (double bound : kRelativeErrorBounds) {
    if (relative_error < bound) ++passed;
  }
  return passed / 10.0;
}

double score_numeric_mra(const ParsedAnswer& parsed, const QAItem& item) {
  if (parsed.kind != ParsedKind::kNumeric || !parsed.value || !item.numeric_answer) return 0.0;
  return mean_relative_accuracy(*parsed.value, item.numeric_answer->value);
}

EvalReport aggregate(const std::vector<ScoredItem>& items, bool weighted) {
  if (items.empty()) throw Error(ErrorKind::kEmptyInput, "no scored items to aggregate");
  EvalReport report;
  report.per_item = items;
  report.weighted = weighted;
  double total = 0.0;
  for (QaCategory category : report_order()) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& item : items) {
      if (item.category == category) {
        sum += item.score;
        ++count;
      }
    }
    if (count > 0) report.per_category.emplace_back(category, sum / static_cast<double>(count) * 100.0);
    total += sum;
  }
  if (weighted) {
    report.overall = total / static_cast<double>(items.size()) * 100.0;
  } else {
    double sum = 0.0;
    for (const auto& [category, mean] : report.per_category) sum += mean;
    report.overall = sum / static_cast<double>(report.per_category.size());
  }
  return report;
}

std::vector<ScoredItem> score_items(const std::vector<QAItem>& items, const std::vector<ModelResponse>& responses) {
  std::unordered_map<std::string, const ModelResponse*> by_id;
  for (const auto& r : responses) by_id[r.qa_id] = &r;
  std::vector<ScoredItem> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    ScoredItem scored{item.qa_id, item.category, 0.0};
    auto it = by_id.find(item.qa_id);
    if (it != by_id.end() && it->second->ok()) {
      const std::string unit = item.numeric_answer ? item.numeric_answer->unit : std::string();
      const ParsedAnswer parsed = parse_answer(*it->second->raw_text, item.answer_kind, unit);
      scored.score = item.answer_kind == AnswerKind::kChoice ? score_choice(parsed, item) : score_numeric_mra(parsed, item);
    }
    out.push_back(std::move(scored));
  }
  return out;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : report.per_item) {
    items.push_back({{"qa_id", s.qa_id}, {"category", category_name(s.category)}, {"score", s.score}});
  }
  nlohmann::json categories = nlohmann::json::array();
  for (const auto& [category, mean] : report.per_category) {
    categories.push_back({{"category", category_name(category)}, {"title", category_title(category)}, {"score", mean}});
  }
  return {{"per_item", items}, {"per_category", categories}, {"overall", report.overall}, {"weighted", report.weighted}};
}

EvalReport report_from_json(const nlohmann::json& doc) {
  try {
    EvalReport report;
    for (const auto& s : doc.at("per_item")) {
      report.per_item.push_back(
          {s.at("qa_id").get<std::string>(), parse_category(s.at("category").get<std::string>()), s.at("score").get<double>()});
    }
    for (const auto& c : doc.at("per_category")) {
      report.per_category.emplace_back(parse_category(c.at("category").get<std::string>()), c.at("score").get<double>());
    }
    report.overall = doc.at("overall").get<double>();
    report.weighted = doc.value("weighted", false);
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("eval report: ") + e.what());
  }
}

std::string report_table(const EvalReport& report) {
  std::vector<std::string> headers;
  std::vector<std::string> values;
  char buf[32];
  for (const auto& [category, mean] : report.per_category) {
    headers.emplace_back(category_title(category));
    std::snprintf(buf, sizeof(buf), "%.1f", mean);
    values.emplace_back(buf);
  }
  headers.emplace_back(report.weighted ? "Avg. (weighted)" : "Avg.");
  std::snprintf(buf, sizeof(buf), "%.1f", report.overall);
  values.emplace_back(buf);

  std::string head, rule, row;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width = std::max(headers[i].size(), values[i].size());
    const std::string sep = i == 0 ? "" : " | ";
    head += sep + headers[i] + std::string(width - headers[i].size(), ' ');
    rule += (i == 0 ? "" : "-+-") + std::string(width, '-');
    row += sep + std::string(width - values[i].size(), ' ') + values[i];
  }
  return head + "\n" + rule + "\n" + row + "\n";
}

}  // namespace bevprompt
