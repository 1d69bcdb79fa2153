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

#include "ei/importance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ei/errors.hpp"

namespace ei {

std::string_view LossName(LossKind kind) {
  return kind == LossKind::kMae ? "mae" : "mse";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "mae") return LossKind::kMae;
  if (name == "mse") return LossKind::kMse;
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

double Loss(double prediction, double target, LossKind kind) {
  const double diff = prediction - target;
  return kind == LossKind::kMae ? std::abs(diff) : diff * diff;
}

std::vector<MarkedSpan> MarkRuns(std::span<const Mark> marks) {
  std::vector<MarkedSpan> runs;
  for (std::size_t k = 0; k < marks.size(); ++k) {
    if (runs.empty() || runs.back().mark != marks[k]) {
      runs.push_back({{k, k + 1}, marks[k]});
    } else {
      runs.back().span.end = k + 1;
    }
  }
  return runs;
}

namespace {

void CheckRow(std::span<const TokenId> row) {
  if (row.empty()) throw InvalidArgument("importance: empty sentence");
}

// Lazily evaluated omissions of [start, start + j] on top of a fixed masked
// row, fetched in batches that double in size.
class ExtensionWave {
 public:
  ExtensionWave(std::span<const TokenId> state, std::size_t start,
                std::size_t first_wave, Predictor& predictor,
                std::optional<std::vector<TokenId>> prepend)
      : state_(state),
        start_(start),
        limit_(state.size() - start),
        next_wave_(std::max<std::size_t>(first_wave, 1)),
        predictor_(predictor),
        prepend_(std::move(prepend)) {}

  std::size_t limit() const { return limit_; }

  // Output for the row with [start, start + j] removed.
  double Output(std::size_t j) {
    while (j >= outputs_.size()) Fetch();
    return outputs_[j];
  }

  // Output for the prepended row, available after the first fetch.
  double prepended() {
    if (outputs_.empty()) Fetch();
    return prepended_output_;
  }

 private:
  void Fetch() {
    const std::size_t first = outputs_.size();
    const std::size_t count = std::min(next_wave_, limit_ - first);
    TokenMatrix rows(state_.size());
    const bool with_prepend = prepend_.has_value();
    if (with_prepend) rows.AppendRow(*prepend_);
    std::vector<TokenId> row(state_.begin(), state_.end());
    for (std::size_t k = start_; k < start_ + first; ++k) row[k] = kAbsent;
    for (std::size_t j = first; j < first + count; ++j) {
      row[start_ + j] = kAbsent;
      rows.AppendRow(row);
    }
    const PredictionBatch out = predictor_.Predict(rows);
    ValidatePredictions(out, predictor_.task(), rows.rows(), 1e-6);
    std::size_t r = 0;
    if (with_prepend) {
      prepended_output_ = out.scalar(r++);
      prepend_.reset();
    }
    for (; r < out.rows(); ++r) outputs_.push_back(out.scalar(r));
    next_wave_ *= 2;
  }

  std::span<const TokenId> state_;
  std::size_t start_;
  std::size_t limit_;
  std::size_t next_wave_;
  Predictor& predictor_;
  std::optional<std::vector<TokenId>> prepend_;
  double prepended_output_ = 0.0;
  std::vector<double> outputs_;
};

}  // namespace

ImportanceMask MarkImportance(std::span<const TokenId> row, double target,
                              Predictor& predictor,
                              const ImportanceOptions& options) {
  CheckRow(row);
  if (!predictor.task().is_regression()) {
    throw InvalidArgument("importance scan requires a regression predictor");
  }
  const std::size_t n = row.size();
  const LossKind kind = options.loss;

  ImportanceMask mask;
  mask.marks.assign(n, Mark::kImportant);
  mask.loss_kind = kind;
  mask.target = target;

  std::vector<TokenId> state(row.begin(), row.end());
  double y_cur = 0.0;
  double loss_cur = 0.0;
  bool first = true;

  std::size_t k = 0;
  while (k < n) {
    std::optional<std::vector<TokenId>> prepend;
    if (first) prepend = state;
    ExtensionWave wave(state, k, options.wave, predictor, std::move(prepend));
    if (first) {
      y_cur = wave.prepended();
      loss_cur = Loss(y_cur, target, kind);
      mask.y_all = {y_cur};
      mask.loss_all = loss_cur;
      mask.loss_trace.push_back(loss_cur);
      first = false;
    }

    auto loss_at = [&](std::size_t j) {
      return Loss(wave.Output(j), target, kind);
    };

    std::size_t j = 0;
    double loss_j = loss_at(0);
    if (loss_j <= loss_cur) {
      while (j + 1 < wave.limit()) {
        const double next = loss_at(j + 1);
        if (next > loss_j) break;
        loss_j = next;
        ++j;
      }
      y_cur = wave.Output(j);
      for (std::size_t p = k; p <= k + j; ++p) {
        mask.marks[p] = Mark::kUnimportant;
        state[p] = kAbsent;
      }
      loss_cur = loss_j;
      mask.loss_trace.push_back(loss_cur);
    } else {
      while (j + 1 < wave.limit()) {
        const double next = loss_at(j + 1);
        if (!(next > loss_j)) break;
        loss_j = next;
        ++j;
      }
    }
    k += j + 1;
  }

  mask.masked_row = std::move(state);
  mask.y_imp = {y_cur};
  mask.loss_imp = loss_cur;
  mask.phrases = MarkRuns(mask.marks);
  return mask;
}

ImportanceMask SkipImportance(std::span<const TokenId> row,
                              Predictor& predictor) {
  CheckRow(row);
  TokenMatrix rows(row.size());
  rows.AppendRow(row);
  const PredictionBatch out = predictor.Predict(rows);
  ValidatePredictions(out, predictor.task(), 1, 1e-6);

  ImportanceMask mask;
  mask.marks.assign(row.size(), Mark::kImportant);
  mask.masked_row.assign(row.begin(), row.end());
  mask.phrases = MarkRuns(mask.marks);
  mask.y_all.assign(out.row(0).begin(), out.row(0).end());
  mask.y_imp = mask.y_all;
  return mask;
}

}  // namespace ei
