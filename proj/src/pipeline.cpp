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

#include "ei/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "ei/errors.hpp"
#include "ei/protocol.hpp"
#include "json.hpp"

namespace ei {

// ---------------------------------------------------------------------------
// Input

IngestResult Ingest(std::istream& in) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto skip = [&](const std::string& why) {
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " +
                                   why);
    };
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      skip("not valid JSON");
      continue;
    }
    if (!doc.is_object()) {
      skip("not a JSON object");
      continue;
    }
    if (!doc.contains("text") || !doc["text"].is_string()) {
      skip("missing string \"text\"");
      continue;
    }
    Record rec;
    rec.line = line_no;
    rec.text = doc["text"].get<std::string>();
    if (doc.contains("id") && !doc["id"].is_null()) {
      const auto& id = doc["id"];
      if (id.is_string()) {
        rec.id = id.get<std::string>();
      } else if (id.is_number_integer()) {
        rec.id = id.dump();
      } else {
        skip("\"id\" must be a string or an integer");
        continue;
      }
    } else {
      rec.id = std::to_string(line_no);
    }
    if (doc.contains("label") && !doc["label"].is_null()) {
      if (!doc["label"].is_number()) {
        skip("\"label\" must be a number");
        continue;
      }
      rec.label = doc["label"].get<double>();
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

IngestResult IngestFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read input " + path);
  IngestResult result = Ingest(in);
  if (result.records.empty()) {
    throw InvalidArgument("no valid records in " + path);
  }
  return result;
}

OutputFormat ParseOutputFormat(std::string_view name) {
  if (name == "json") return OutputFormat::kJson;
  if (name == "ansi") return OutputFormat::kAnsi;
  if (name == "html") return OutputFormat::kHtml;
  throw InvalidArgument("unknown format '" + std::string(name) + "'");
}

ModelSource ModelSource::Parse(std::string_view text) {
  ModelSource src;
  auto starts = [&](std::string_view prefix) {
    return text.substr(0, prefix.size()) == prefix;
  };
  if (starts("builtin:")) {
    src.kind = Kind::kBuiltin;
    src.spec_path = std::string(text.substr(8));
    if (src.spec_path.empty()) throw InvalidArgument("builtin: needs a path");
  } else if (starts("cmd:")) {
    src.kind = Kind::kCommand;
    std::istringstream words{std::string(text.substr(4))};
    for (std::string w; words >> w;) src.argv.push_back(w);
    if (src.argv.empty()) throw InvalidArgument("cmd: needs a command");
  } else if (starts("tcp:")) {
    src.kind = Kind::kTcp;
    const std::string_view rest = text.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw InvalidArgument("tcp: expects host:port");
    }
    src.host = std::string(rest.substr(0, colon));
    const std::string port(rest.substr(colon + 1));
    char* end = nullptr;
    const long value = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || value <= 0 || value > 65535) {
      throw InvalidArgument("tcp: bad port '" + port + "'");
    }
    src.port = static_cast<std::uint16_t>(value);
  } else {
    throw InvalidArgument("--model must start with builtin:, cmd: or tcp:");
  }
  return src;
}

std::unique_ptr<Predictor> MakePredictor(const RunConfig& config) {
  const Task wanted = config.task == TaskKind::kRegression
                          ? Task::Regression()
                          : Task::Classification(config.num_classes);
  switch (config.model.kind) {
    case ModelSource::Kind::kBuiltin: {
      const LinearModelSpec spec = LinearModelSpec::Load(config.model.spec_path);
      if (spec.task().kind != config.task) {
        throw InvalidArgument("model spec is a " +
                              std::string(TaskName(spec.task().kind)) +
                              " model but --task is " +
                              std::string(TaskName(config.task)));
      }
      return std::make_unique<LinearPredictor>(spec);
    }
    case ModelSource::Kind::kCommand:
      return std::make_unique<protocol::RemotePredictor>(
          std::make_unique<protocol::ChildProcessTransport>(config.model.argv),
          wanted);
    case ModelSource::Kind::kTcp:
      return std::make_unique<protocol::RemotePredictor>(
          protocol::ConnectTcp(config.model.host, config.model.port), wanted);
  }
  throw InvalidArgument("unknown model source");
}

// ---------------------------------------------------------------------------
// Explain

ExplanationReport ExplainOne(const Record& record, const RunConfig& config,
                             const Vocabulary& vocab, Predictor& predictor) {
  ExplanationReport report;
  report.id = record.id;
  report.text = record.text;
  report.task = predictor.task();
  report.target = record.label;

  CountingPredictor counter(predictor);
  try {
    const TokenizedSentence sentence = Tokenize(record.text, vocab);
    report.tokens = sentence.tokens;
    const std::size_t n = sentence.size();

    ScanMode mode = config.mode.value_or(ScanMode::kExhaustive);
    if (!config.mode && n > config.long_threshold) {
      mode = ScanMode::kEarlyStop;
      report.warnings.push_back(
          std::to_string(n) + " tokens exceed " +
          std::to_string(config.long_threshold) +
          "; switched to early-stop mode");
    }
    report.accounting.mode = mode;

    ImportanceMask mask;
    if (report.task.is_regression() && record.label) {
      ImportanceOptions opts;
      opts.loss = config.loss;
      opts.wave = std::max<std::size_t>(config.max_gram, 1);
      mask = MarkImportance(sentence.indices, *record.label, counter, opts);
    } else {
      mask = SkipImportance(sentence.indices, counter);
    }

    EffectOptions eopts;
    eopts.tau = config.tau;
    eopts.max_gram = config.max_gram;
    eopts.focus_class = config.focus_class;
    EffectResult effects = mode == ScanMode::kExhaustive
                               ? EffectScanExhaustive(mask, counter, eopts)
                               : EffectScanEarlyStop(mask, counter, eopts);

    report.prediction = mask.y_all;
    if (report.task.is_classification()) {
      report.predicted_class = static_cast<std::size_t>(
          std::max_element(mask.y_all.begin(), mask.y_all.end()) -
          mask.y_all.begin());
      report.focus_class = effects.focus_class;
    }
    report.importance.scanned = mask.scanned();
    report.importance.loss = mask.loss_kind;
    report.importance.loss_all = mask.loss_all;
    report.importance.loss_imp = mask.loss_imp;
    report.importance.y_imp = mask.y_imp;
    report.importance.phrases = mask.phrases;
    report.effects = std::move(effects.effects);
    report.display = DisplayCover(report.effects, effects.focus_class);
    report.longest_span = effects.longest_span;
    for (auto& w : effects.warnings) report.warnings.push_back(std::move(w));
  } catch (const TransportError&) {
    throw;
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    report.error = e.what();
  }
  report.accounting.batch_invocations = counter.invocations();
  report.accounting.rows_predicted = counter.rows_predicted();
  return report;
}

// ---------------------------------------------------------------------------
// Run

std::string FormatSummary(const RunSummary& s) {
  std::ostringstream out;
  out << "ei: records=" << s.records << " errors=" << s.errors
      << " skipped_lines=" << s.skipped_lines << " positive=" << s.positive
      << " negative=" << s.negative << " neutral=" << s.neutral
      << " batch_invocations=" << s.batch_invocations
      << " rows_predicted=" << s.rows_predicted;
  return out.str();
}

namespace {

class ReportSink {
 public:
  ReportSink(const RunConfig& config) : config_(config) {
    if (config.format == OutputFormat::kHtml && config.html_split) {
      std::filesystem::create_directories(config.output_path);
      return;
    }
    if (config.output_path != "-") {
      file_.open(config.output_path, std::ios::binary | std::ios::trunc);
      if (!file_) {
        throw InvalidArgument("cannot write output " + config.output_path);
      }
    }
  }

  void Write(const ExplanationReport& report) {
    switch (config_.format) {
      case OutputFormat::kJson:
        out() << RenderJson(report) << '\n';
        break;
      case OutputFormat::kAnsi: {
        AnsiOptions opts;
        opts.color = config_.color;
        opts.with_scores = true;
        out() << "# " << report.id;
        if (report.error) out() << "  error: " << *report.error;
        out() << '\n' << RenderAnsi(report, opts) << '\n';
        break;
      }
      case OutputFormat::kHtml:
        if (config_.html_split) {
          char name[32];
          std::snprintf(name, sizeof(name), "report-%05zu.html", ++written_);
          std::ofstream f(std::filesystem::path(config_.output_path) / name,
                          std::ios::binary | std::ios::trunc);
          f << RenderHtml(report);
        } else {
          html_.push_back(report);
        }
        break;
    }
    out().flush();
  }

  void Finish() {
    if (config_.format == OutputFormat::kHtml && !config_.html_split) {
      out() << RenderHtmlDocument(html_);
    }
    out().flush();
  }

 private:
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

  const RunConfig& config_;
  std::ofstream file_;
  std::vector<ExplanationReport> html_;
  std::size_t written_ = 0;
};

void Tally(const ExplanationReport& report, RunSummary& summary) {
  ++summary.records;
  if (report.error) ++summary.errors;
  for (const auto& e : report.effects) {
    switch (e.label) {
      case EffectLabel::kPositive:
        ++summary.positive;
        break;
      case EffectLabel::kNegative:
        ++summary.negative;
        break;
      case EffectLabel::kNeutral:
        ++summary.neutral;
        break;
    }
  }
  summary.batch_invocations += report.accounting.batch_invocations;
  summary.rows_predicted += report.accounting.rows_predicted;
}

}  // namespace

int RunWithPredictor(const RunConfig& config, Predictor& predictor,
                     std::ostream& log, RunSummary* summary_out) {
  RunSummary summary;
  IngestResult input;
  std::optional<Vocabulary> vocab;
  try {
    vocab = Vocabulary::Load(config.vocab_path);
    input = IngestFile(config.input_path);
  } catch (const Error& e) {
    log << "ei: " << e.what() << '\n';
    return 2;
  }
  for (const auto& d : input.diagnostics) log << "ei: skipped " << d << '\n';
  summary.skipped_lines = input.diagnostics.size();

  std::optional<ReportSink> sink;
  try {
    sink.emplace(config);
  } catch (const Error& e) {
    log << "ei: " << e.what() << '\n';
    return 1;
  }

  const std::size_t jobs =
      predictor.concurrent() ? std::max<std::size_t>(config.jobs, 1) : 1;
  int status = 0;
  try {
    const auto& records = input.records;
    for (std::size_t begin = 0; begin < records.size(); begin += jobs) {
      const std::size_t end = std::min(records.size(), begin + jobs);
      std::vector<std::future<ExplanationReport>> pending;
      for (std::size_t k = begin; k < end; ++k) {
        pending.push_back(std::async(
            jobs > 1 ? std::launch::async : std::launch::deferred,
            [&, k] { return ExplainOne(records[k], config, *vocab, predictor); }));
      }
      for (auto& f : pending) {
        const ExplanationReport report = f.get();
        if (report.error) {
          log << "ei: record " << report.id << ": " << *report.error << '\n';
        }
        Tally(report, summary);
        sink->Write(report);
      }
    }
  } catch (const Error& e) {
    log << "ei: fatal: " << e.what() << '\n';
    status = 3;
  }
  sink->Finish();
  log << FormatSummary(summary) << '\n';
  if (summary_out) *summary_out = summary;
  return status;
}

int Run(const RunConfig& config, std::ostream& log) {
  std::unique_ptr<Predictor> predictor;
  try {
    predictor = MakePredictor(config);
  } catch (const InvalidArgument& e) {
    log << "ei: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    log << "ei: fatal: " << e.what() << '\n';
    return 3;
  }
  return RunWithPredictor(config, *predictor, log);
}

}  // namespace ei
