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

#ifndef EI_PIPELINE_HPP_
#define EI_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ei/effect.hpp"
#include "ei/importance.hpp"
#include "ei/predictor.hpp"
#include "ei/report.hpp"
#include "ei/vocab.hpp"

namespace ei {

struct Record {
  std::string id;
  std::string text;
  // Regression target or class index.
  std::optional<double> label;
  std::size_t line = 0;
};

struct IngestResult {
  std::vector<Record> records;
  // "line N: reason" for every skipped line.
  std::vector<std::string> diagnostics;
};

// Reads JSONL records {"id"?: string|int, "text": string, "label"?: number}.
// Malformed lines are skipped with a diagnostic. Records without an id get
// their 1-based line number.
IngestResult Ingest(std::istream& in);
// Throws InvalidArgument if the file cannot be read or holds no valid record.
IngestResult IngestFile(const std::string& path);

enum class OutputFormat { kJson, kAnsi, kHtml };
OutputFormat ParseOutputFormat(std::string_view name);

struct ModelSource {
  enum class Kind { kBuiltin, kCommand, kTcp };
  Kind kind = Kind::kBuiltin;
  std::string spec_path;          // builtin
  std::vector<std::string> argv;  // cmd
  std::string host;               // tcp
  std::uint16_t port = 0;

  // builtin:<spec.json> | cmd:<argv...> | tcp:<host:port>
  static ModelSource Parse(std::string_view text);
};

struct RunConfig {
  TaskKind task = TaskKind::kRegression;
  // Class count expected from external classifiers.
  std::size_t num_classes = 2;
  // Unset means exhaustive, switching to early-stop above long_threshold.
  std::optional<ScanMode> mode;
  LossKind loss = LossKind::kMae;
  std::size_t max_gram = 64;
  double tau = kDefaultTau;
  std::size_t long_threshold = 512;
  std::optional<std::size_t> focus_class;
  ModelSource model;
  std::string vocab_path;
  std::string input_path;
  std::string output_path = "-";
  OutputFormat format = OutputFormat::kJson;
  bool color = true;
  // HTML only: one file per record inside output_path instead of one page.
  bool html_split = false;
  std::size_t jobs = 1;
};

// Builds the predictor named by the config. External predictors complete the
// handshake before returning.
std::unique_ptr<Predictor> MakePredictor(const RunConfig& config);

// tokenize -> importance scan (regression with a target) or skip -> effect
// scan -> report. Model and input errors are recorded in report.error;
// transport and protocol failures propagate.
ExplanationReport ExplainOne(const Record& record, const RunConfig& config,
                             const Vocabulary& vocab, Predictor& predictor);

struct RunSummary {
  std::size_t records = 0;
  std::size_t errors = 0;
  std::size_t skipped_lines = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t neutral = 0;
  std::uint64_t batch_invocations = 0;
  std::uint64_t rows_predicted = 0;
};

std::string FormatSummary(const RunSummary& summary);

// Runs the whole pipeline and returns the process exit status: 0 on success,
// 1 for configuration errors, 2 for unusable input, 3 when the external
// predictor fails. Diagnostics and the summary line go to `log`.
int Run(const RunConfig& config, std::ostream& log);

// Same, with an already constructed predictor.
int RunWithPredictor(const RunConfig& config, Predictor& predictor,
                     std::ostream& log, RunSummary* summary = nullptr);

}  // namespace ei

#endif  // EI_PIPELINE_HPP_
