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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

#include "ei/effect.hpp"
#include "ei/importance.hpp"
#include "ei/perturbation.hpp"
#include "ei/pipeline.hpp"
#include "ei/report.hpp"
#include "support/test_util.hpp"

using namespace ei;
using ei::testing::Gen;
using ei::testing::ReadFile;
using ei::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;
};

Outcome Fail(std::string why) { return {false, std::move(why)}; }

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

constexpr TokenId kVocab = 200;

// 1
Outcome BatchedEqualsSequential() {
  const auto start = Clock::now();
  Gen gen(1);
  std::size_t matrices = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = gen.Size(1, 50);
    const auto row = gen.Row(n, kVocab);
    const LinearModelSpec spec =
        trial % 2 == 0 ? gen.Regressor(kVocab) : gen.Classifier(kVocab, gen.Size(2, 4));
    LinearPredictor model(spec);
    for (std::size_t g = 1; g <= n; ++g) {
      const PerturbationBatch batch = BuildGramMatrix(row, g);
      if (RunBatch(batch, model).values() != SequentialOracle(batch, model).values()) {
        return Fail(Fmt("trial %.0f gram %.0f differs", trial, static_cast<double>(g)));
      }
      ++matrices;
    }
  }
  const double secs = Seconds(start);
  if (secs >= 10) return Fail(Fmt("took %.2f s", secs));
  return {true, Fmt("%.0f matrices bit-identical, %.2f s", static_cast<double>(matrices), secs)};
}

// 2
Outcome LossMonotone() {
  const auto start = Clock::now();
  Gen gen(2);
  std::size_t checked = 0;
  for (LossKind loss : {LossKind::kMae, LossKind::kMse}) {
    for (int trial = 0; trial < 500; ++trial) {
      const LinearModelSpec spec = gen.Regressor(kVocab);
      LinearPredictor model(spec);
      const auto row = gen.Row(gen.Size(1, 40), kVocab);
      const double target = gen.Real(-10, 10);
      ImportanceOptions opts;
      opts.loss = loss;
      const ImportanceMask mask = MarkImportance(row, target, model, opts);
      if (!(*mask.loss_imp <= *mask.loss_all)) {
        return Fail(std::string(LossName(loss)) + Fmt(" trial %.0f: %.17g > %.17g", trial,
                                                      *mask.loss_imp, *mask.loss_all));
      }
      ++checked;
    }
  }
  const double secs = Seconds(start);
  if (secs >= 10) return Fail(Fmt("took %.2f s", secs));
  return {true, Fmt("%.0f triples (MAE and MSE), %.2f s", static_cast<double>(checked), secs)};
}

// 3
Outcome SignFidelity() {
  Gen gen(3);
  std::size_t cases = 0;
  auto sign = [](double v) { return std::abs(v) <= 1e-9 ? 0 : (v > 0 ? 1 : -1); };
  while (cases < 1000) {
    const LinearModelSpec spec = gen.Regressor(kVocab);
    // Keep the baseline positive most of the time.
    LinearModelSpec shifted = spec;
    shifted.bias += 20.0;
    LinearPredictor model(shifted);
    const auto row = gen.Row(gen.Size(1, 20), kVocab);
    const ImportanceMask mask = MarkImportance(row, gen.Real(0, 40), model);
    if (!(mask.y_imp[0] > 0)) continue;
    const EffectResult fx = EffectScanExhaustive(mask, model);
    for (const auto& e : fx.effects) {
      if (e.span.size() != 1 || !mask.important(e.span.start) || cases >= 1000) continue;
      const double coef = shifted.coefficients.at(row[e.span.start]);
      if (sign(e.scores[0].value) != sign(coef)) {
        return Fail(Fmt("EI %.17g vs coefficient %.17g", e.scores[0].value, coef));
      }
      ++cases;
    }
  }
  return {true, Fmt("%.0f single-token spans", static_cast<double>(cases))};
}

// 4
Outcome InvocationBound() {
  Gen gen(4);
  std::string detail;
  for (std::size_t n : {5, 20, 50}) {
    std::uint64_t worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      LinearPredictor model(gen.Regressor(kVocab));
      const auto row = gen.Row(n, kVocab);
      CountingPredictor part1(model);
      const ImportanceMask mask = MarkImportance(row, gen.Real(-5, 5), part1);
      CountingPredictor part2(model);
      EffectScanExhaustive(mask, part2);
      const auto total = part1.invocations() + part2.invocations();
      worst = std::max(worst, total);
      if (total > 2 * n) {
        return Fail(Fmt("n=%.0f: %.0f invocations", static_cast<double>(n),
                        static_cast<double>(total)));
      }
      if (part2.rows_predicted() != n * (n + 1) / 2) {
        return Fail(Fmt("n=%.0f: %.0f rows in effect scan", static_cast<double>(n),
                        static_cast<double>(part2.rows_predicted())));
      }
    }
    detail += Fmt("n=%.0f max %.0f/%.0f ", static_cast<double>(n), static_cast<double>(worst),
                  static_cast<double>(2 * n));
  }
  return {true, detail + "invocations, effect rows n(n+1)/2"};
}

// 5
Outcome MatrixShape() {
  std::size_t matrices = 0;
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<TokenId> base(n);
    for (std::size_t k = 0; k < n; ++k) base[k] = static_cast<TokenId>(k + 1);
    for (std::size_t g = 1; g <= n; ++g) {
      const PerturbationBatch b = BuildGramMatrix(base, g);
      if (b.rows.rows() != n - g + 1 || b.rows.cols() != n) {
        return Fail(Fmt("n=%.0f g=%.0f wrong shape", static_cast<double>(n), static_cast<double>(g)));
      }
      for (std::size_t r = 0; r < b.rows.rows(); ++r) {
        const auto row = b.rows.row(r);
        for (std::size_t k = 0; k < n; ++k) {
          const bool masked = k >= r && k < r + g;
          if (row[k] != (masked ? kAbsent : base[k])) {
            return Fail(Fmt("n=%.0f g=%.0f row %.0f", static_cast<double>(n),
                            static_cast<double>(g), static_cast<double>(r)));
          }
        }
      }
      ++matrices;
    }
  }
  return {true, Fmt("%.0f matrices, 1 <= g <= n <= 64", static_cast<double>(matrices))};
}

// 6
Outcome EarlyStopAtScale() {
  const auto start = Clock::now();
  Gen gen(6);
  std::unordered_map<std::string, TokenId> words;
  for (TokenId t = 2; t <= kVocab; ++t) words["w" + std::to_string(t)] = t;
  const Vocabulary vocab(words, 1);
  std::string text;
  const std::size_t n = 5000;
  for (std::size_t k = 0; k < n; ++k) {
    text += (k ? " w" : "w") + std::to_string(gen.Size(2, kVocab));
  }
  LinearPredictor model(gen.Regressor(kVocab));
  RunConfig config;
  const ExplanationReport r = ExplainOne({"long", text, std::nullopt, 1}, config, vocab, model);
  const double secs = Seconds(start);
  if (r.error) return Fail(*r.error);
  if (r.accounting.mode != ScanMode::kEarlyStop) return Fail("early-stop did not engage");
  std::size_t next = 0;
  for (const auto& e : r.effects) {
    if (e.span.start != next || e.span.end <= e.span.start) return Fail("spans do not tile");
    next = e.span.end;
  }
  if (next != n) return Fail("spans do not cover the input");
  const std::uint64_t exhaustive = n * (n + 1) / 2;
  if (r.accounting.rows_predicted >= exhaustive) return Fail("no fewer rows than exhaustive");
  if (secs >= 60) return Fail(Fmt("took %.2f s", secs));
  return {true, Fmt("%.0f rows vs 12502500, longest span %.0f, %.2f s",
                    static_cast<double>(r.accounting.rows_predicted),
                    static_cast<double>(r.longest_span), secs)};
}

// 7
Outcome TwoClassAntisymmetry() {
  Gen gen(7);
  std::size_t both = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LinearPredictor model(gen.Classifier(kVocab, 2));
    const std::size_t n = gen.Size(1, 30);
    const auto row = gen.Row(n, kVocab);
    const std::size_t s = gen.Size(0, n - 1);
    const Span span{s, gen.Size(s + 1, n)};
    const EffectResult fx = ClassifyEffects(row, model);
    const PhraseEffect* hit = nullptr;
    for (const auto& e : fx.effects) {
      if (e.span == span) hit = &e;
    }
    if (!hit || hit->scores.size() != 2) return Fail("phrase not scored");
    const double a = hit->scores[0].value;
    const double b = hit->scores[1].value;
    if (std::abs(a) > 1e-9 && std::abs(b) > 1e-9) {
      ++both;
      if ((a > 0) == (b > 0)) return Fail(Fmt("EI %.17g and %.17g share a sign", a, b));
    }
  }
  return {true, Fmt("200 phrases, %.0f with both |EI| > 1e-9", static_cast<double>(both))};
}

// 8
Outcome Determinism() {
  TempDir dir;
  Gen gen(8);
  std::ostringstream vocab;
  vocab << R"({"oov_index":1)";
  for (TokenId t = 2; t <= 60; ++t) vocab << ",\"w" << t << "\":" << t;
  vocab << "}";
  const auto vocab_path = dir.Write("vocab.json", vocab.str());
  const auto model_path = dir.Write("model.json", gen.Regressor(60).ToJson());
  std::ostringstream records;
  for (int k = 0; k < 50; ++k) {
    records << R"({"id":"r)" << k << R"(","text":")";
    const std::size_t n = gen.Size(1, 25);
    for (std::size_t w = 0; w < n; ++w) records << (w ? " w" : "w") << gen.Size(2, 70);
    records << "\"";
    if (k % 3 != 0) records << ",\"label\":" << gen.Size(0, 10);
    records << "}\n";
  }
  const auto input_path = dir.Write("in.jsonl", records.str());
  std::string outputs[2];
  for (int run = 0; run < 2; ++run) {
    const auto out = dir.path() / ("out" + std::to_string(run) + ".jsonl");
    const std::string cmd = std::string("'") + EI_EXPLAIN + "' --model 'builtin:" +
                            model_path.string() + "' --vocab '" + vocab_path.string() +
                            "' --input '" + input_path.string() + "' --output '" + out.string() +
                            "' 2>/dev/null";
    if (std::system(cmd.c_str()) != 0) return Fail("CLI run failed");
    outputs[run] = ReadFile(out);
  }
  if (outputs[0].empty() || outputs[0] != outputs[1]) return Fail("CLI outputs differ");
  std::size_t lines = 0;
  for (char c : outputs[0]) lines += c == '\n';
  if (lines != 50) return Fail("expected 50 reports");

  ExplanationReport fixture;
  fixture.text = "a bad movie that happened to good actors";
  fixture.tokens = {"a", "bad", "movie", "that", "happened", "to", "good", "actors"};
  fixture.task = Task::Regression();
  fixture.prediction = {1.0};
  auto effect = [](Span span, double value) {
    PhraseEffect e;
    e.span = span;
    e.scores = {EIScore{value, 1.0, 1.0 - value / 100.0, false, LabelFor(value, kDefaultTau)}};
    e.label = e.scores[0].label;
    return e;
  };
  fixture.effects = {effect({0, 3}, -60.0), effect({6, 8}, 25.0)};
  fixture.display = {0, 1};
  if (RenderAnsi(fixture) !=
      "\x1b[31ma bad movie\x1b[0m that happened to \x1b[32mgood actors\x1b[0m") {
    return Fail("ANSI rendering of the fixture is wrong");
  }
  const std::string html = RenderHtml(fixture);
  if (html.find("<span class=\"ei-neg\" title=\"EI -60.00% disabler\">a bad movie</span> that "
                "happened to <span class=\"ei-pos\" title=\"EI +25.00% enabler\">good actors</span>") ==
      std::string::npos) {
    return Fail("HTML rendering of the fixture is wrong");
  }
  return {true, "2 CLI runs x 50 records byte-identical, fixture renders red/green"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"batched perturbation equals sequential oracle", BatchedEqualsSequential},
      {"importance loss never exceeds full-sentence loss", LossMonotone},
      {"single-token EI sign follows the coefficient", SignFidelity},
      {"at most 2n batch invocations", InvocationBound},
      {"g-gram matrix shape and band", MatrixShape},
      {"early-stop on 5000 tokens", EarlyStopAtScale},
      {"2-class EI signs are opposite", TwoClassAntisymmetry},
      {"end-to-end determinism and rendering", Determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = Fail(std::string("exception: ") + e.what());
    }
    std::printf("%s  %d  %s: %s\n", o.ok ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.ok;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
