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

#ifndef EI_EFFECT_HPP_
#define EI_EFFECT_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ei/errors.hpp"
#include "ei/importance.hpp"
#include "ei/predictor.hpp"
#include "ei/vocab.hpp"

namespace ei {

enum class EffectLabel { kPositive, kNegative, kNeutral };

std::string_view LabelName(EffectLabel label);
EffectLabel ParseLabel(std::string_view name);

inline constexpr double kDefaultTau = 1e-9;
inline constexpr double kDefaultEpsilon = 1e-12;

// Thrown by EiScore when |baseline| < epsilon.
class DegenerateBaseline : public Error {
 public:
  using Error::Error;
};

// Percentage change of the model output caused by excluding a phrase:
// (baseline - excluded) / baseline * 100.
double EiScore(double baseline, double excluded,
               double epsilon = kDefaultEpsilon);

// positive if value > tau, negative if value < -tau, neutral otherwise.
EffectLabel LabelFor(double value, double tau);

struct EIScore {
  // Percentage change, or the raw signed difference when degenerate.
  double value = 0.0;
  double baseline = 0.0;
  double excluded = 0.0;
  bool degenerate = false;
  EffectLabel label = EffectLabel::kNeutral;

  friend bool operator==(const EIScore&, const EIScore&) = default;
};

struct PhraseEffect {
  Span span;
  // Label of the focus class (the only class for regression).
  EffectLabel label = EffectLabel::kNeutral;
  // One entry per output; empty when the span lies entirely in an
  // unimportant region and was not scored.
  std::vector<EIScore> scores;

  friend bool operator==(const PhraseEffect&, const PhraseEffect&) = default;
};

enum class ScanMode { kExhaustive, kEarlyStop };

std::string_view ScanModeName(ScanMode mode);
ScanMode ParseScanMode(std::string_view name);

struct EffectOptions {
  double tau = kDefaultTau;
  double epsilon = kDefaultEpsilon;
  // Longest phrase the early-stop scan may grow.
  std::size_t max_gram = 64;
  // Class whose labels drive PhraseEffect::label. Defaults to the argmax of
  // the baseline probabilities.
  std::optional<std::size_t> focus_class;
};

struct EffectResult {
  std::vector<PhraseEffect> effects;
  std::size_t focus_class = 0;
  std::size_t longest_span = 0;
  std::vector<std::string> warnings;
};

// Scores every contiguous span of the masked row: one predictor invocation
// per gram size, n(n+1)/2 rows in total. Spans made only of unimportant
// positions are reported neutral without scores.
EffectResult EffectScanExhaustive(const ImportanceMask& mask,
                                  Predictor& predictor,
                                  const EffectOptions& options = {});

// Greedy left-to-right scan for long inputs. At each important position the
// single-word omission fixes a direction; the omission grows rightward while
// the output keeps moving strictly further in that direction, up to
// max_gram words. The emitted spans and the unimportant runs tile [0, n).
EffectResult EffectScanEarlyStop(const ImportanceMask& mask,
                                 Predictor& predictor,
                                 const EffectOptions& options = {});

// Classification entry point: no importance scan, per-class scores against
// the probabilities of the full sentence.
EffectResult ClassifyEffects(std::span<const TokenId> row, Predictor& predictor,
                             const EffectOptions& options = {});

// Non-overlapping spans for display, chosen greedily by descending |EI| of
// the focus class among non-neutral scored effects. Returns indices into
// `effects`, ordered by span start.
std::vector<std::size_t> DisplayCover(std::span<const PhraseEffect> effects,
                                      std::size_t focus_class);

}  // namespace ei

#endif  // EI_EFFECT_HPP_
