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

#include "ei/report.hpp"

#include <cstdio>
#include <string>

#include "ei/errors.hpp"
#include "json.hpp"

namespace ei {

using ordered_json = nlohmann::ordered_json;

void ValidateReport(const ExplanationReport& report) {
  const std::size_t n = report.tokens.size();
  auto check_span = [&](const Span& s, std::string_view what) {
    if (s.start >= s.end || s.end > n) {
      throw InvalidArgument("report: " + std::string(what) + " span [" +
                            std::to_string(s.start) + "," +
                            std::to_string(s.end) + ") outside " +
                            std::to_string(n) + " tokens");
    }
  };
  for (const auto& p : report.importance.phrases) check_span(p.span, "phrase");
  for (const auto& e : report.effects) check_span(e.span, "effect");
  for (std::size_t k : report.display) {
    if (k >= report.effects.size()) {
      throw InvalidArgument("report: display index out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

ordered_json ScoreToJson(const EIScore& s) {
  ordered_json j;
  j["value"] = s.value;
  j["baseline"] = s.baseline;
  j["excluded"] = s.excluded;
  j["degenerate"] = s.degenerate;
  j["label"] = LabelName(s.label);
  return j;
}

template <typename T>
ordered_json Optional(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

const nlohmann::json& Field(const nlohmann::json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw InvalidArgument(std::string("report: missing field \"") + name +
                          "\"");
  }
  return obj.at(name);
}

template <typename T>
std::optional<T> OptionalField(const nlohmann::json& obj, const char* name) {
  if (!obj.contains(name) || obj.at(name).is_null()) return std::nullopt;
  return obj.at(name).get<T>();
}

Span SpanFrom(const nlohmann::json& obj) {
  return {Field(obj, "start").get<std::size_t>(),
          Field(obj, "end").get<std::size_t>()};
}

Mark ParseMark(std::string_view name) {
  if (name == "important") return Mark::kImportant;
  if (name == "unimportant") return Mark::kUnimportant;
  throw InvalidArgument("report: unknown mark '" + std::string(name) + "'");
}

}  // namespace

std::string RenderJson(const ExplanationReport& report) {
  ordered_json doc;
  doc["schema"] = kReportSchema;
  doc["id"] = report.id;
  doc["text"] = report.text;
  doc["tokens"] = report.tokens;
  doc["task"] = TaskName(report.task.kind);
  doc["num_classes"] = report.task.num_classes;
  doc["prediction"] = report.prediction;
  doc["predicted_class"] = Optional(report.predicted_class);
  doc["target"] = Optional(report.target);

  ordered_json imp;
  imp["scanned"] = report.importance.scanned;
  imp["loss"] = report.importance.loss
                    ? ordered_json(LossName(*report.importance.loss))
                    : ordered_json(nullptr);
  imp["loss_all"] = Optional(report.importance.loss_all);
  imp["loss_imp"] = Optional(report.importance.loss_imp);
  imp["y_imp"] = report.importance.y_imp;
  ordered_json phrases = ordered_json::array();
  for (const auto& p : report.importance.phrases) {
    ordered_json jp;
    jp["start"] = p.span.start;
    jp["end"] = p.span.end;
    jp["mark"] = p.mark == Mark::kImportant ? "important" : "unimportant";
    phrases.push_back(std::move(jp));
  }
  imp["phrases"] = std::move(phrases);
  doc["importance"] = std::move(imp);

  doc["focus_class"] = Optional(report.focus_class);
  ordered_json effects = ordered_json::array();
  for (const auto& e : report.effects) {
    ordered_json je;
    je["start"] = e.span.start;
    je["end"] = e.span.end;
    je["label"] = LabelName(e.label);
    ordered_json scores = ordered_json::array();
    for (const auto& s : e.scores) scores.push_back(ScoreToJson(s));
    je["scores"] = std::move(scores);
    effects.push_back(std::move(je));
  }
  doc["effects"] = std::move(effects);
  doc["display"] = report.display;
  doc["longest_span"] = report.longest_span;

  ordered_json acc;
  acc["batch_invocations"] = report.accounting.batch_invocations;
  acc["rows_predicted"] = report.accounting.rows_predicted;
  acc["mode"] = ScanModeName(report.accounting.mode);
  doc["accounting"] = std::move(acc);
  doc["warnings"] = report.warnings;
  doc["error"] = Optional(report.error);
  return doc.dump();
}

ExplanationReport ParseReportJson(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("report: ") + e.what());
  }
  try {
    if (Field(doc, "schema").get<std::string>() != kReportSchema) {
      throw InvalidArgument("report: unsupported schema");
    }
    ExplanationReport r;
    r.id = Field(doc, "id").get<std::string>();
    r.text = Field(doc, "text").get<std::string>();
    r.tokens = Field(doc, "tokens").get<std::vector<std::string>>();
    r.task.kind = ParseTaskKind(Field(doc, "task").get<std::string>());
    r.task.num_classes = Field(doc, "num_classes").get<std::size_t>();
    r.prediction = Field(doc, "prediction").get<std::vector<double>>();
    r.predicted_class = OptionalField<std::size_t>(doc, "predicted_class");
    r.target = OptionalField<double>(doc, "target");

    const auto& imp = Field(doc, "importance");
    r.importance.scanned = Field(imp, "scanned").get<bool>();
    if (auto loss = OptionalField<std::string>(imp, "loss")) {
      r.importance.loss = ParseLossKind(*loss);
    }
    r.importance.loss_all = OptionalField<double>(imp, "loss_all");
    r.importance.loss_imp = OptionalField<double>(imp, "loss_imp");
    r.importance.y_imp = Field(imp, "y_imp").get<std::vector<double>>();
    for (const auto& jp : Field(imp, "phrases")) {
      r.importance.phrases.push_back(
          {SpanFrom(jp), ParseMark(Field(jp, "mark").get<std::string>())});
    }

    r.focus_class = OptionalField<std::size_t>(doc, "focus_class");
    for (const auto& je : Field(doc, "effects")) {
      PhraseEffect e;
      e.span = SpanFrom(je);
      e.label = ParseLabel(Field(je, "label").get<std::string>());
      for (const auto& js : Field(je, "scores")) {
        EIScore s;
        s.value = Field(js, "value").get<double>();
        s.baseline = Field(js, "baseline").get<double>();
        s.excluded = Field(js, "excluded").get<double>();
        s.degenerate = Field(js, "degenerate").get<bool>();
        s.label = ParseLabel(Field(js, "label").get<std::string>());
        e.scores.push_back(s);
      }
      r.effects.push_back(std::move(e));
    }
    r.display = Field(doc, "display").get<std::vector<std::size_t>>();
    r.longest_span = Field(doc, "longest_span").get<std::size_t>();

    const auto& acc = Field(doc, "accounting");
    r.accounting.batch_invocations =
        Field(acc, "batch_invocations").get<std::uint64_t>();
    r.accounting.rows_predicted =
        Field(acc, "rows_predicted").get<std::uint64_t>();
    r.accounting.mode = ParseScanMode(Field(acc, "mode").get<std::string>());
    r.warnings = Field(doc, "warnings").get<std::vector<std::string>>();
    r.error = OptionalField<std::string>(doc, "error");
    ValidateReport(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Human formats

namespace {

std::string FormatEi(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.2f", value);
  return buf;
}

// Label of each displayed span keyed by start position.
struct Highlight {
  Span span;
  EffectLabel label;
  double value;
  bool degenerate;
};

std::vector<Highlight> Highlights(const ExplanationReport& report) {
  std::vector<Highlight> out;
  const std::size_t focus = report.focus_class.value_or(0);
  for (std::size_t k : report.display) {
    const PhraseEffect& e = report.effects.at(k);
    if (e.label == EffectLabel::kNeutral || focus >= e.scores.size()) continue;
    out.push_back({e.span, e.label, e.scores[focus].value,
                   e.scores[focus].degenerate});
  }
  return out;
}

template <typename Open, typename Close>
std::string Weave(const ExplanationReport& report,
                  const std::vector<Highlight>& highlights, Open open,
                  Close close, std::string (*escape)(std::string_view)) {
  std::string out;
  std::size_t h = 0;
  for (std::size_t k = 0; k < report.tokens.size(); ++k) {
    if (k > 0) out.push_back(' ');
    if (h < highlights.size() && highlights[h].span.start == k) {
      out += open(highlights[h]);
    }
    out += escape(report.tokens[k]);
    if (h < highlights.size() && highlights[h].span.end == k + 1) {
      out += close(highlights[h]);
      ++h;
    }
  }
  return out;
}

std::string Identity(std::string_view s) { return std::string(s); }

}  // namespace

std::string RenderAnsi(const ExplanationReport& report,
                       const AnsiOptions& options) {
  const auto highlights = Highlights(report);
  const bool color = options.color;
  auto open = [color](const Highlight& h) -> std::string {
    const bool pos = h.label == EffectLabel::kPositive;
    if (color) return pos ? "\x1b[32m" : "\x1b[31m";
    return pos ? "[+" : "[-";
  };
  auto close = [color](const Highlight& h) -> std::string {
    if (color) return "\x1b[0m";
    return h.label == EffectLabel::kPositive ? "+]" : "-]";
  };
  std::string out = Weave(report, highlights, open, close, &Identity);
  if (options.with_scores) {
    for (const auto& h : highlights) {
      out += "\n  " + FormatEi(h.value) + (h.degenerate ? " (raw)" : "") +
             "  [" + std::to_string(h.span.start) + "," +
             std::to_string(h.span.end) + ")  ";
      for (std::size_t k = h.span.start; k < h.span.end; ++k) {
        if (k > h.span.start) out.push_back(' ');
        out += report.tokens[k];
      }
    }
  }
  return out;
}

std::string HtmlEscape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&#39;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

namespace {

constexpr std::string_view kHtmlHead = R"(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>EI explanations</title>
<style>
body { font-family: sans-serif; margin: 2em; line-height: 1.8; }
.report { border-bottom: 1px solid #ccc; padding: 0.5em 0 1em; }
.meta { color: #555; font-size: 0.85em; }
.ei-pos { background: #b7e4b0; border-radius: 3px; padding: 0 2px; }
.ei-neg { background: #f4b6b6; border-radius: 3px; padding: 0 2px; }
.error { color: #a00; }
</style>
</head>
<body>
)";

constexpr std::string_view kHtmlTail = "</body>\n</html>\n";

std::string HtmlSection(const ExplanationReport& report) {
  const bool regression = report.task.is_regression();
  std::string out = "<div class=\"report\">\n<div class=\"meta\">";
  out += "id " + HtmlEscape(report.id) + " &middot; " +
         std::string(TaskName(report.task.kind));
  if (!report.prediction.empty()) {
    if (regression) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4f", report.prediction[0]);
      out += " &middot; prediction " + std::string(buf);
    } else if (report.predicted_class) {
      out += " &middot; predicted class " +
             std::to_string(*report.predicted_class);
    }
  }
  if (report.focus_class && !regression) {
    out += " &middot; focus class " + std::to_string(*report.focus_class);
  }
  out += "</div>\n";
  if (report.error) {
    out += "<p class=\"error\">" + HtmlEscape(*report.error) + "</p>\n";
  }

  const std::string positive = regression ? "enabler" : "positive";
  const std::string negative = regression ? "disabler" : "negative";
  auto open = [&](const Highlight& h) {
    const bool pos = h.label == EffectLabel::kPositive;
    std::string title = "EI " + FormatEi(h.value) +
                        (h.degenerate ? " (raw difference)" : "%") + " " +
                        (pos ? positive : negative);
    return std::string("<span class=\"") + (pos ? "ei-pos" : "ei-neg") +
           "\" title=\"" + HtmlEscape(title) + "\">";
  };
  auto close = [](const Highlight&) { return std::string("</span>"); };
  out += "<p class=\"text\">" +
         Weave(report, Highlights(report), open, close, &HtmlEscape) +
         "</p>\n</div>\n";
  return out;
}

}  // namespace

std::string RenderHtml(const ExplanationReport& report) {
  return RenderHtmlDocument(std::span<const ExplanationReport>(&report, 1));
}

std::string RenderHtmlDocument(std::span<const ExplanationReport> reports) {
  std::string out(kHtmlHead);
  for (const auto& r : reports) out += HtmlSection(r);
  out += kHtmlTail;
  return out;
}

}  // namespace ei
