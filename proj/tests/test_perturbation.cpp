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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ei/errors.hpp"
#include "ei/perturbation.hpp"
#include "support/test_util.hpp"

using namespace ei;
using ei::testing::Gen;

namespace {

std::vector<std::vector<TokenId>> Rows(const PerturbationBatch& b) {
  std::vector<std::vector<TokenId>> out;
  for (std::size_t r = 0; r < b.rows.rows(); ++r) {
    auto row = b.rows.row(r);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

LinearModelSpec Counting5678() {
  LinearModelSpec spec;
  spec.coefficients = {{5, 1.0}, {6, 2.0}, {7, 3.0}, {8, 4.0}};
  return spec;
}

}  // namespace

TEST_CASE("unigram matrix zeroes the diagonal") {
  const std::vector<TokenId> base{5, 6, 7, 8};
  const auto b = BuildGramMatrix(base, 1);
  CHECK(Rows(b) == std::vector<std::vector<TokenId>>{
                       {0, 6, 7, 8}, {5, 0, 7, 8}, {5, 6, 0, 8}, {5, 6, 7, 0}});
}

TEST_CASE("bigram matrix zeroes the diagonal and the one next to it") {
  const std::vector<TokenId> base{5, 6, 7, 8};
  const auto b = BuildGramMatrix(base, 2);
  CHECK(Rows(b) == std::vector<std::vector<TokenId>>{
                       {0, 0, 7, 8}, {5, 0, 0, 8}, {5, 6, 0, 0}});
  CHECK(b.span(1) == Span{1, 3});

  const auto whole = BuildGramMatrix(std::vector<TokenId>{5, 6}, 2);
  CHECK(Rows(whole) == std::vector<std::vector<TokenId>>{{0, 0}});
}

TEST_CASE("gram size outside [1, n] is rejected") {
  const std::vector<TokenId> base{5, 6, 7};
  CHECK_THROWS_AS(BuildGramMatrix(base, 0), InvalidArgument);
  CHECK_THROWS_AS(BuildGramMatrix(base, 4), InvalidArgument);
  CHECK_THROWS_AS(BuildGramMatrix(std::vector<TokenId>{}, 1), InvalidArgument);
}

TEST_CASE("pre-masked zeros stay zero") {
  const std::vector<TokenId> base{5, 0, 7};
  const auto b = BuildGramMatrix(base, 1);
  CHECK(Rows(b) == std::vector<std::vector<TokenId>>{{0, 0, 7}, {5, 0, 7}, {5, 0, 0}});
}

TEST_CASE("run_batch on a linear model") {
  LinearPredictor model(Counting5678());
  CountingPredictor counter(model);
  const std::vector<TokenId> base{5, 6, 7, 8};
  const auto out = RunBatch(BuildGramMatrix(base, 1), counter);
  CHECK(out.values() == std::vector<double>{9, 8, 7, 6});
  CHECK(counter.invocations() == 1);
  CHECK(RunBatch(BuildGramMatrix(base, 4), counter).values() ==
        std::vector<double>{0});
}

TEST_CASE("run_batch equals the sequential oracle") {
  Gen gen(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const TokenId vocab = 50;
    const auto spec = trial % 3 == 0 ? gen.Classifier(vocab, 3) : gen.Regressor(vocab);
    LinearPredictor model(spec);
    const std::size_t n = gen.Size(1, 30);
    const auto base = gen.Row(n, vocab);
    const std::size_t g = gen.Size(1, n);
    const auto batch = BuildGramMatrix(base, g);
    REQUIRE(RunBatch(batch, model) == SequentialOracle(batch, model));
  }
  // g = n leaves a single row.
  LinearPredictor model(Counting5678());
  const auto single = BuildGramMatrix(std::vector<TokenId>{5, 6}, 2);
  CHECK(RunBatch(single, model) == SequentialOracle(single, model));
}

TEST_CASE("rows differ from the base exactly on the band") {
  Gen gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = gen.Size(1, 40);
    const auto base = gen.Row(n, 99);
    const std::size_t g = gen.Size(1, n);
    const auto b = BuildGramMatrix(base, g);
    REQUIRE(b.rows.rows() == n - g + 1);
    for (std::size_t r = 0; r < b.rows.rows(); ++r) {
      auto row = b.rows.row(r);
      for (std::size_t k = 0; k < n; ++k) {
        const bool in_band = k >= r && k < r + g;
        REQUIRE(row[k] == (in_band ? kAbsent : base[k]));
      }
    }
  }
}

TEST_CASE("a full pass over all gram sizes predicts n(n+1)/2 rows") {
  LinearModelSpec spec;
  spec.coefficients = {{1, 1.0}};
  LinearPredictor model(spec);
  CountingPredictor counter(model);
  const std::vector<TokenId> base(50, 1);
  for (std::size_t g = 1; g <= 50; ++g) RunBatch(BuildGramMatrix(base, g), counter);
  CHECK(counter.rows_predicted() == 1275);
  CHECK(counter.invocations() == 50);
}

TEST_CASE("MaskSpans zeroes the given positions") {
  const std::vector<TokenId> base{1, 2, 3, 4, 5};
  const std::vector<Span> spans{{0, 1}, {3, 5}};
  CHECK(MaskSpans(base, spans) == std::vector<TokenId>{0, 2, 3, 0, 0});
}
