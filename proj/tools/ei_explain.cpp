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

// Command-line driver: explain every record of a JSONL file with a built-in
// linear model or an external ei-predict/1 process.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ei/errors.hpp"
#include "ei/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Phrase-level exclusion-inclusion explanations for text models",
               "ei_explain"};

  std::string task = "regression";
  std::string mode;
  std::string loss = "mae";
  std::string model;
  std::string format = "json";
  std::size_t classes = 2;
  long long focus = -1;
  bool no_color = false;

  ei::RunConfig config;
  app.add_option("--task", task, "regression | classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  app.add_option("--classes", classes,
                 "Class count expected from an external classifier")
      ->check(CLI::Range(2, 1 << 20));
  app.add_option("--mode", mode,
                 "exhaustive | early-stop (default: exhaustive, early-stop "
                 "above --long-threshold tokens)")
      ->check(CLI::IsMember({"exhaustive", "early-stop"}));
  app.add_option("--loss", loss, "Importance loss: mae | mse")
      ->check(CLI::IsMember({"mae", "mse"}));
  app.add_option("--max-gram", config.max_gram,
                 "Longest phrase grown by the early-stop scan")
      ->check(CLI::PositiveNumber);
  app.add_option("--tau", config.tau, "Neutral threshold on |EI|")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--long-threshold", config.long_threshold,
                 "Token count above which early-stop engages automatically");
  app.add_option("--focus-class", focus,
                 "Class whose labels drive rendering (default: predicted)");
  app.add_option("--model", model,
                 "builtin:<spec.json> | cmd:<argv> | tcp:<host:port>")
      ->required();
  app.add_option("--vocab", config.vocab_path, "Vocabulary JSON")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--input", config.input_path, "Input JSONL")->required();
  app.add_option("--output", config.output_path,
                 "Output file, '-' for stdout, or a directory with --split");
  app.add_option("--format", format, "json | ansi | html")
      ->check(CLI::IsMember({"json", "ansi", "html"}));
  app.add_flag("--split", config.html_split,
               "With --format html, write one file per record");
  app.add_flag("--no-color", no_color, "Disable ANSI styling");
  app.add_option("--jobs", config.jobs,
                 "Records explained in parallel (concurrent predictors only)")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    config.task = ei::ParseTaskKind(task);
    config.num_classes = classes;
    if (!mode.empty()) config.mode = ei::ParseScanMode(mode);
    config.loss = ei::ParseLossKind(loss);
    config.format = ei::ParseOutputFormat(format);
    config.model = ei::ModelSource::Parse(model);
    if (focus >= 0) config.focus_class = static_cast<std::size_t>(focus);
    config.color = !no_color && std::getenv("NO_COLOR") == nullptr;
  } catch (const ei::Error& e) {
    std::cerr << "ei: " << e.what() << '\n';
    return 1;
  }
  return ei::Run(config, std::cerr);
}
