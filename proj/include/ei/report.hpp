// Copyright 2026 The EI Explain Authors.
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

#ifndef EI_REPORT_HPP_
#define EI_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ei/effect.hpp"
#include "ei/importance.hpp"
#include "ei/predictor.hpp"

namespace ei {

inline constexpr std::string_view kReportSchema = "ei-report/1";

struct Accounting {
  std::uint64_t batch_invocations = 0;
  std::uint64_t rows_predicted = 0;
  ScanMode mode = ScanMode::kExhaustive;
  friend bool operator==(const Accounting&, const Accounting&) = default;
};

struct ImportanceSummary {
  bool scanned = false;
  std::optional<LossKind> loss;
  std::optional<double> loss_all;
  std::optional<double> loss_imp;
  std::vector<double> y_imp;
  std::vector<MarkedSpan> phrases;
  friend bool operator==(const ImportanceSummary&,
                         const ImportanceSummary&) = default;
};

struct ExplanationReport {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  Task task;
  // Model output on the full sentence.
  std::vector<double> prediction;
  std::optional<std::size_t> predicted_class;
  std::optional<double> target;
  ImportanceSummary importance;
  // Every scored span, in scan order.
  std::vector<PhraseEffect> effects;
  // Non-overlapping subset of `effects` (indices) used by human renderers.
  std::vector<std::size_t> display;
  std::optional<std::size_t> focus_class;
  std::size_t longest_span = 0;
  Accounting accounting;
  std::vector<std::string> warnings;
  std::optional<std::string> error;

  friend bool operator==(const ExplanationReport&,
                         const ExplanationReport&) = default;
};

// Throws InvalidArgument when a span or display index is out of range.
void ValidateReport(const ExplanationReport& report);

// One-line ei-report/1 document with a fixed field order.
std::string RenderJson(const ExplanationReport& report);
ExplanationReport ParseReportJson(std::string_view json_text);

struct AnsiOptions {
  bool color = true;
  // Append one line per displayed span with its EI value.
  bool with_scores = false;
};

// Tokens joined by spaces; positive display spans in green, negative in red.
// Without color the spans are bracketed as [+...+] and [-...-].
std::string RenderAnsi(const ExplanationReport& report,
                       const AnsiOptions& options = {});

// Self-contained HTML page for one report.
std::string RenderHtml(const ExplanationReport& report);
// Self-contained HTML page holding several reports.
std::string RenderHtmlDocument(std::span<const ExplanationReport> reports);

std::string HtmlEscape(std::string_view text);

}  // namespace ei

#endif  // EI_REPORT_HPP_
