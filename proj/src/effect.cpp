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

#include "ei/effect.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ei/errors.hpp"
#include "ei/kernels.hpp"
#include "ei/perturbation.hpp"

namespace ei {

std::string_view LabelName(EffectLabel label) {
  switch (label) {
    case EffectLabel::kPositive:
      return "positive";
    case EffectLabel::kNegative:
      return "negative";
    case EffectLabel::kNeutral:
      return "neutral";
  }
  return "neutral";
}

EffectLabel ParseLabel(std::string_view name) {
  if (name == "positive") return EffectLabel::kPositive;
  if (name == "negative") return EffectLabel::kNegative;
  if (name == "neutral") return EffectLabel::kNeutral;
  throw InvalidArgument("unknown effect label '" + std::string(name) + "'");
}

std::string_view ScanModeName(ScanMode mode) {
  return mode == ScanMode::kExhaustive ? "exhaustive" : "early-stop";
}

ScanMode ParseScanMode(std::string_view name) {
  if (name == "exhaustive") return ScanMode::kExhaustive;
  if (name == "early-stop") return ScanMode::kEarlyStop;
  throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

double EiScore(double baseline, double excluded, double epsilon) {
  if (!(std::abs(baseline) >= epsilon)) {
    throw DegenerateBaseline("EI baseline " + std::to_string(baseline) +
                             " is below epsilon");
  }
  return (baseline - excluded) / baseline * 100.0;
}

EffectLabel LabelFor(double value, double tau) {
  if (value > tau) return EffectLabel::kPositive;
  if (value < -tau) return EffectLabel::kNegative;
  return EffectLabel::kNeutral;
}

namespace {

bool Degenerate(double baseline, double epsilon) {
  return !(std::abs(baseline) >= epsilon);
}

EIScore MakeScore(double baseline, double excluded, double value,
                  const EffectOptions& options) {
  EIScore s;
  s.baseline = baseline;
  s.excluded = excluded;
  s.degenerate = Degenerate(baseline, options.epsilon);
  s.value = value;
  s.label = LabelFor(value, options.tau);
  return s;
}

EIScore ScoreOne(double baseline, double excluded,
                 const EffectOptions& options) {
  const double value = Degenerate(baseline, options.epsilon)
                           ? baseline - excluded
                           : EiScore(baseline, excluded, options.epsilon);
  return MakeScore(baseline, excluded, value, options);
}

std::size_t ResolveFocus(const ImportanceMask& mask, const Task& task,
                         const EffectOptions& options) {
  if (task.is_regression()) return 0;
  if (options.focus_class) {
    if (*options.focus_class >= task.num_classes) {
      throw InvalidArgument("focus class " +
                            std::to_string(*options.focus_class) +
                            " out of range");
    }
    return *options.focus_class;
  }
  const auto& probs = mask.y_all.empty() ? mask.y_imp : mask.y_all;
  return static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void CheckMask(const ImportanceMask& mask, const Task& task) {
  if (mask.masked_row.empty()) {
    throw InvalidArgument("effect scan: empty sentence");
  }
  if (mask.marks.size() != mask.masked_row.size()) {
    throw InvalidArgument("effect scan: marks and row differ in length");
  }
  if (mask.y_imp.size() != task.width()) {
    throw InvalidArgument("effect scan: baseline width does not match task");
  }
}

void WarnDegenerate(const ImportanceMask& mask, const EffectOptions& options,
                    EffectResult& result) {
  for (std::size_t c = 0; c < mask.y_imp.size(); ++c) {
    if (Degenerate(mask.y_imp[c], options.epsilon)) {
      result.warnings.push_back(
          "baseline for output " + std::to_string(c) +
          " is below epsilon; EI values are raw differences");
    }
  }
}

}  // namespace

EffectResult EffectScanExhaustive(const ImportanceMask& mask,
                                  Predictor& predictor,
                                  const EffectOptions& options) {
  const Task task = predictor.task();
  CheckMask(mask, task);
  const std::size_t n = mask.masked_row.size();
  const std::size_t width = task.width();
  const auto& kernels = kernels::ActiveKernels();

  EffectResult result;
  result.focus_class = ResolveFocus(mask, task, options);
  WarnDegenerate(mask, options, result);
  result.effects.reserve(n * (n + 1) / 2);

  // important_before[k] = number of important positions in [0, k).
  std::vector<std::size_t> important_before(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    important_before[k + 1] = important_before[k] + (mask.important(k) ? 1 : 0);
  }

  std::vector<double> column;
  std::vector<double> values;
  std::vector<std::vector<EIScore>> per_row;
  for (std::size_t g = 1; g <= n; ++g) {
    const PerturbationBatch batch = BuildGramMatrix(mask.masked_row, g);
    const PredictionBatch out = RunBatch(batch, predictor);
    ValidatePredictions(out, task, batch.rows.rows(), 1e-6);
    const std::size_t rows = out.rows();

    per_row.assign(rows, {});
    column.resize(rows);
    values.resize(rows);
    for (std::size_t c = 0; c < width; ++c) {
      const double baseline = mask.y_imp[c];
      for (std::size_t r = 0; r < rows; ++r) column[r] = out.at(r, c);
      if (Degenerate(baseline, options.epsilon)) {
        for (std::size_t r = 0; r < rows; ++r) values[r] = baseline - column[r];
      } else {
        kernels.percent_change(baseline, column, values);
      }
      for (std::size_t r = 0; r < rows; ++r) {
        per_row[r].push_back(MakeScore(baseline, column[r], values[r], options));
      }
    }

    for (std::size_t r = 0; r < rows; ++r) {
      PhraseEffect effect;
      effect.span = batch.span(r);
      const bool any_important = important_before[effect.span.end] !=
                                 important_before[effect.span.start];
      if (any_important) {
        effect.scores = std::move(per_row[r]);
        effect.label = effect.scores[result.focus_class].label;
      }
      result.effects.push_back(std::move(effect));
    }
  }
  result.longest_span = n;
  return result;
}

namespace {

// Outputs for the masked row with [start, start + j] removed, fetched in
// batches that double in size.
class GrowingOmission {
 public:
  GrowingOmission(std::span<const TokenId> row, std::size_t start,
                  std::size_t limit, Predictor& predictor)
      : row_(row), start_(start), limit_(limit), predictor_(predictor) {}

  std::size_t limit() const { return limit_; }

  std::span<const double> Output(std::size_t j) {
    while (j >= fetched_) Fetch();
    const std::size_t width = predictor_.task().width();
    return {outputs_.data() + j * width, width};
  }

 private:
  void Fetch() {
    const std::size_t count = std::min(next_wave_, limit_ - fetched_);
    TokenMatrix rows(row_.size());
    std::vector<TokenId> row(row_.begin(), row_.end());
    for (std::size_t k = start_; k < start_ + fetched_; ++k) row[k] = kAbsent;
    for (std::size_t j = fetched_; j < fetched_ + count; ++j) {
      row[start_ + j] = kAbsent;
      rows.AppendRow(row);
    }
    const PredictionBatch out = predictor_.Predict(rows);
    ValidatePredictions(out, predictor_.task(), count, 1e-6);
    outputs_.insert(outputs_.end(), out.values().begin(), out.values().end());
    fetched_ += count;
    next_wave_ *= 2;
  }

  std::span<const TokenId> row_;
  std::size_t start_;
  std::size_t limit_;
  Predictor& predictor_;
  std::size_t fetched_ = 0;
  std::size_t next_wave_ = 2;
  std::vector<double> outputs_;
};

std::vector<EIScore> ScoreRow(std::span<const double> baseline,
                              std::span<const double> excluded,
                              const EffectOptions& options) {
  std::vector<EIScore> scores;
  scores.reserve(baseline.size());
  for (std::size_t c = 0; c < baseline.size(); ++c) {
    scores.push_back(ScoreOne(baseline[c], excluded[c], options));
  }
  return scores;
}

}  // namespace

EffectResult EffectScanEarlyStop(const ImportanceMask& mask,
                                 Predictor& predictor,
                                 const EffectOptions& options) {
  const Task task = predictor.task();
  CheckMask(mask, task);
  if (options.max_gram < 1) {
    throw InvalidArgument("early-stop scan: max_gram must be >= 1");
  }
  const std::size_t n = mask.masked_row.size();

  EffectResult result;
  result.focus_class = ResolveFocus(mask, task, options);
  WarnDegenerate(mask, options, result);
  const std::size_t focus = result.focus_class;

  std::size_t i = 0;
  while (i < n) {
    if (!mask.important(i)) {
      std::size_t end = i + 1;
      while (end < n && !mask.important(end)) ++end;
      result.effects.push_back({{i, end}, EffectLabel::kNeutral, {}});
      i = end;
      continue;
    }

    GrowingOmission omission(mask.masked_row, i,
                             std::min(options.max_gram, n - i), predictor);
    std::vector<EIScore> first = ScoreRow(mask.y_imp, omission.Output(0), options);
    const EffectLabel direction = first[focus].label;
    std::size_t j = 0;
    if (direction != EffectLabel::kNeutral) {
      double prev = omission.Output(0)[focus];
      while (j + 1 < omission.limit()) {
        const double next = omission.Output(j + 1)[focus];
        const bool further = direction == EffectLabel::kPositive
                                 ? next < prev
                                 : next > prev;
        if (!further) break;
        prev = next;
        ++j;
      }
    }

    PhraseEffect effect;
    effect.span = {i, i + j + 1};
    effect.scores = j == 0 ? std::move(first)
                           : ScoreRow(mask.y_imp, omission.Output(j), options);
    effect.label = effect.scores[focus].label;
    result.longest_span = std::max(result.longest_span, effect.span.size());
    result.effects.push_back(std::move(effect));
    i += j + 1;
  }
  return result;
}

EffectResult ClassifyEffects(std::span<const TokenId> row, Predictor& predictor,
                             const EffectOptions& options) {
  if (!predictor.task().is_classification()) {
    throw InvalidArgument("ClassifyEffects requires a classification predictor");
  }
  const ImportanceMask mask = SkipImportance(row, predictor);
  return EffectScanExhaustive(mask, predictor, options);
}

std::vector<std::size_t> DisplayCover(std::span<const PhraseEffect> effects,
                                      std::size_t focus_class) {
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < effects.size(); ++k) {
    const PhraseEffect& e = effects[k];
    if (e.label != EffectLabel::kNeutral && focus_class < e.scores.size()) {
      candidates.push_back(k);
    }
  }
  auto magnitude = [&](std::size_t k) {
    return std::abs(effects[k].scores[focus_class].value);
  };
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ma = magnitude(a);
                     const double mb = magnitude(b);
                     if (ma != mb) return ma > mb;
                     const Span& sa = effects[a].span;
                     const Span& sb = effects[b].span;
                     if (sa.start != sb.start) return sa.start < sb.start;
                     return sa.size() < sb.size();
                   });

  std::vector<std::size_t> chosen;
  std::vector<Span> taken;
  for (std::size_t k : candidates) {
    const Span& s = effects[k].span;
    const bool overlaps = std::any_of(taken.begin(), taken.end(), [&](const Span& t) {
      return s.start < t.end && t.start < s.end;
    });
    if (overlaps) continue;
    taken.push_back(s);
    chosen.push_back(k);
  }
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    return effects[a].span.start < effects[b].span.start;
  });
  return chosen;
}

}  // namespace ei
