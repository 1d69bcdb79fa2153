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

#ifndef EI_PERTURBATION_HPP_
#define EI_PERTURBATION_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "ei/predictor.hpp"
#include "ei/vocab.hpp"

namespace ei {

// Copies of a base row with a sliding window of `gram` positions zeroed.
// Row r masks [r, r + gram); there are base.size() - gram + 1 rows.
struct PerturbationBatch {
  std::vector<TokenId> base;
  std::size_t gram = 0;
  TokenMatrix rows;

  Span span(std::size_t r) const { return {r, r + gram}; }
};

// Throws InvalidArgument unless 1 <= gram <= base.size().
PerturbationBatch BuildGramMatrix(std::span<const TokenId> base,
                                  std::size_t gram);

// Copy of `base` with every position of `spans` set to 0.
std::vector<TokenId> MaskSpans(std::span<const TokenId> base,
                               std::span<const Span> spans);

// One predictor invocation for the whole batch.
PredictionBatch RunBatch(const PerturbationBatch& batch, Predictor& predictor);

// Row-at-a-time reference for RunBatch.
PredictionBatch SequentialOracle(const PerturbationBatch& batch,
                                 Predictor& predictor);

}  // namespace ei

#endif  // EI_PERTURBATION_HPP_
