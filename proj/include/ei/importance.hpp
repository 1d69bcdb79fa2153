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

#ifndef EI_IMPORTANCE_HPP_
#define EI_IMPORTANCE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ei/predictor.hpp"
#include "ei/vocab.hpp"

namespace ei {

enum class LossKind { kMae, kMse };

std::string_view LossName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

double Loss(double prediction, double target, LossKind kind);

enum class Mark { kImportant, kUnimportant };

struct MarkedSpan {
  Span span;
  Mark mark = Mark::kImportant;
  friend bool operator==(const MarkedSpan&, const MarkedSpan&) = default;
};

struct ImportanceMask {
  std::vector<Mark> marks;
  // The input row with every unimportant position set to 0.
  std::vector<TokenId> masked_row;
  // Maximal runs of equal marks; they tile [0, n).
  std::vector<MarkedSpan> phrases;
  // Model output (task().width() values) on the unmasked and masked rows.
  std::vector<double> y_all;
  std::vector<double> y_imp;
  // Set only when the loss scan ran.
  std::optional<LossKind> loss_kind;
  std::optional<double> target;
  std::optional<double> loss_all;
  std::optional<double> loss_imp;
  // Running loss after each accepted removal, starting at loss_all.
  std::vector<double> loss_trace;

  bool scanned() const { return loss_kind.has_value(); }
  bool important(std::size_t pos) const {
    return marks[pos] == Mark::kImportant;
  }
};

struct ImportanceOptions {
  LossKind loss = LossKind::kMae;
  // Rows per speculative extension batch. When an extension runs past the
  // batch, the next batch doubles in size.
  std::size_t wave = 64;
};

// Loss-pivot scan over a regression model. Walks the row left to right;
// a word whose removal (on top of everything already removed) does not raise
// the loss starts an unimportant phrase, extended while each further removal
// keeps the loss from rising, and the phrase is removed for the rest of the
// scan. Otherwise the word starts an important phrase, extended while each
// further removal strictly raises the loss. Removals are cumulative, so
// loss_imp <= loss_all holds by construction.
ImportanceMask MarkImportance(std::span<const TokenId> row, double target,
                              Predictor& predictor,
                              const ImportanceOptions& options = {});

// Marks every position important and predicts the unmasked row once. Used for
// classification, and for regression when no target is known.
ImportanceMask SkipImportance(std::span<const TokenId> row,
                              Predictor& predictor);

// Maximal runs of equal marks.
std::vector<MarkedSpan> MarkRuns(std::span<const Mark> marks);

}  // namespace ei

#endif  // EI_IMPORTANCE_HPP_
