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

#include "ei/perturbation.hpp"

#include <algorithm>
#include <string>

#include "ei/errors.hpp"

namespace ei {

PerturbationBatch BuildGramMatrix(std::span<const TokenId> base,
                                  std::size_t gram) {
  const std::size_t n = base.size();
  if (gram < 1 || gram > n) {
    throw InvalidArgument("gram size " + std::to_string(gram) +
                          " outside [1, " + std::to_string(n) + "]");
  }
  PerturbationBatch batch;
  batch.base.assign(base.begin(), base.end());
  batch.gram = gram;

  const std::size_t count = n - gram + 1;
  batch.rows = TokenMatrix(count, n);
  for (std::size_t r = 0; r < count; ++r) {
    auto row = batch.rows.row(r);
    std::copy(base.begin(), base.end(), row.begin());
    std::fill_n(row.begin() + static_cast<std::ptrdiff_t>(r), gram, kAbsent);
  }
  return batch;
}

std::vector<TokenId> MaskSpans(std::span<const TokenId> base,
                               std::span<const Span> spans) {
  std::vector<TokenId> out(base.begin(), base.end());
  for (const Span& s : spans) {
    const std::size_t end = std::min(s.end, out.size());
    for (std::size_t k = s.start; k < end; ++k) out[k] = kAbsent;
  }
  return out;
}

PredictionBatch RunBatch(const PerturbationBatch& batch, Predictor& predictor) {
  PredictionBatch out = predictor.Predict(batch.rows);
  if (out.rows() != batch.rows.rows()) {
    throw ModelError("predictor returned " + std::to_string(out.rows()) +
                     " outputs for " + std::to_string(batch.rows.rows()) +
                     " rows");
  }
  return out;
}

PredictionBatch SequentialOracle(const PerturbationBatch& batch,
                                 Predictor& predictor) {
  PredictionBatch out;
  for (std::size_t r = 0; r < batch.rows.rows(); ++r) {
    TokenMatrix single(batch.rows.cols());
    single.AppendRow(batch.rows.row(r));
    out.Append(predictor.Predict(single));
  }
  return out;
}

}  // namespace ei
