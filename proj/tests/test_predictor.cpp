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

#include <cmath>

#include "ei/errors.hpp"
#include "ei/predictor.hpp"
#include "ei/vocab.hpp"
#include "support/test_util.hpp"

using namespace ei;
using ei::testing::Gen;

namespace {

LinearModelSpec GoodMovie() {
  LinearModelSpec spec;
  spec.bias = 1.0;
  spec.coefficients = {{1, 0.5}, {2, 0.0}};
  return spec;
}

PredictionBatch PredictRows(Predictor& p,
                            const std::vector<std::vector<TokenId>>& rows) {
  return p.Predict(TokenMatrix::FromRows(rows));
}

}  // namespace

TEST_CASE("linear regression is bias plus the coefficient sum") {
  LinearPredictor model(GoodMovie());
  const auto out = PredictRows(model, {{1, 2}, {0, 0}});
  CHECK(out.scalar(0) == 1.5);
  CHECK(out.scalar(1) == 1.0);

  LinearModelSpec cancel;
  cancel.bias = 1.0;
  cancel.coefficients = {{1, 0.5}, {2, -0.5}};
  CHECK(LinearPredict(cancel, std::vector<TokenId>{1, 2})[0] == 1.0);

  LinearModelSpec abc;
  abc.coefficients = {{1, 0.1}, {2, 0.2}, {3, 0.3}};
  CHECK(LinearPredict(abc, std::vector<TokenId>{1, 2, 3})[0] ==
        doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("linear classification normalizes with softmax") {
  LinearModelSpec spec;
  spec.class_biases = {0.0, 0.0};
  spec.class_coefficients = {{{1, 2.0}}, {{1, 0.0}}};
  const auto p = LinearPredict(spec, std::vector<TokenId>{1});
  // e^2 / (e^2 + 1)
  CHECK(p[0] == doctest::Approx(0.8807970779778824).epsilon(1e-15));
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto tie = LinearPredict(spec, std::vector<TokenId>{0, 0});
  CHECK(tie[0] == 0.5);
  CHECK(tie[1] == 0.5);
}

TEST_CASE("counting predictor records invocations and rows") {
  LinearPredictor model(GoodMovie());
  CountingPredictor counter(model);
  counter.Predict(TokenMatrix::FromRows({{1}, {2}, {1}, {0}}));
  CHECK(counter.invocations() == 1);
  CHECK(counter.rows_predicted() == 4);
  counter.Reset();
  counter.Predict(TokenMatrix::FromRows({{1}, {2}, {1}}));
  counter.Predict(TokenMatrix::FromRows({{1}, {2}, {1}}));
  CHECK(counter.invocations() == 2);
  CHECK(counter.rows_predicted() == 6);
  CHECK(counter.task() == model.task());
}

TEST_CASE("built-in predictors are pure and batch-invariant") {
  Gen gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const TokenId vocab = 30;
    const LinearModelSpec spec = trial % 2 ? gen.Regressor(vocab)
                                           : gen.Classifier(vocab, gen.Size(2, 5));
    LinearPredictor model(spec);
    const std::size_t n = gen.Size(1, 20);
    TokenMatrix rows(n);
    const std::size_t m = gen.Size(1, 12);
    for (std::size_t r = 0; r < m; ++r) {
      auto row = gen.Row(n, vocab);
      if (gen.Coin()) row[gen.Size(0, n - 1)] = kAbsent;
      rows.AppendRow(row);
    }
    TokenMatrix doubled = rows;
    for (std::size_t r = 0; r < m; ++r) doubled.AppendRow(rows.row(r));

    const auto once = model.Predict(rows);
    const auto twice = model.Predict(doubled);
    PredictionBatch sequential;
    for (std::size_t r = 0; r < m; ++r) {
      TokenMatrix single(n);
      single.AppendRow(rows.row(r));
      sequential.Append(model.Predict(single));
    }
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < once.width(); ++c) {
        REQUIRE(twice.at(r, c) == twice.at(r + m, c));
        REQUIRE(twice.at(r, c) == once.at(r, c));
      }
    }
    REQUIRE(sequential == once);
    if (spec.task().is_classification()) {
      for (std::size_t r = 0; r < m; ++r) {
        double sum = 0;
        for (double p : once.row(r)) sum += p;
        REQUIRE(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("masking one position removes exactly that coefficient") {
  Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const TokenId vocab = 25;
    const LinearModelSpec spec = gen.Regressor(vocab, /*dyadic=*/true);
    LinearPredictor model(spec);
    const std::size_t n = gen.Size(1, 40);
    auto row = gen.Row(n, vocab);
    const std::size_t k = gen.Size(0, n - 1);
    auto masked = row;
    masked[k] = kAbsent;
    const auto out = PredictRows(model, {row, masked});
    REQUIRE(out.scalar(1) - out.scalar(0) == -spec.coefficients.at(row[k]));
  }
}

TEST_CASE("model spec json round trip and validation") {
  const auto spec = LinearModelSpec::FromJson(
      R"({"bias": 1.0, "coefficients": {"1": 0.5, "2": 0.0}})");
  CHECK(spec.bias == 1.0);
  CHECK(spec.coefficients.at(1) == 0.5);
  CHECK(spec.task().is_regression());
  const auto again = LinearModelSpec::FromJson(spec.ToJson());
  CHECK(again.coefficients == spec.coefficients);

  const auto cls = LinearModelSpec::FromJson(
      R"({"class_biases": [0, 0.5], "class_coefficients": [{"1": 1}, {"2": -1}]})");
  CHECK(cls.task() == Task::Classification(2));
  CHECK(LinearModelSpec::FromJson(cls.ToJson()).class_coefficients ==
        cls.class_coefficients);

  CHECK_THROWS_AS(LinearModelSpec::FromJson(R"({"coefficients": {"0": 1.0}})"),
                  InvalidArgument);
  CHECK_NOTHROW(LinearModelSpec::FromJson(R"({"coefficients": {"0": 0.0}})"));
  CHECK_THROWS_AS(LinearModelSpec::FromJson(R"({"coefficients": {"x": 1.0}})"),
                  InvalidArgument);
  CHECK_THROWS_AS(LinearModelSpec::FromJson(R"({"coefficients": {"-2": 1.0}})"),
                  InvalidArgument);
  CHECK_THROWS_AS(
      LinearModelSpec::FromJson(R"({"class_biases": [0], "class_coefficients": [{}]})"),
      InvalidArgument);
  CHECK_THROWS_AS(
      LinearModelSpec::FromJson(R"({"class_biases": [0, 1], "class_coefficients": [{}]})"),
      InvalidArgument);
  CHECK_THROWS_AS(LinearModelSpec::FromJson("nope"), InvalidArgument);
}

TEST_CASE("prediction validation rejects bad batches") {
  const Task cls = Task::Classification(2);
  CHECK_NOTHROW(ValidatePredictions(PredictionBatch(2, {0.25, 0.75}), cls, 1, 1e-9));
  CHECK_THROWS_AS(ValidatePredictions(PredictionBatch(2, {0.2, 0.6}), cls, 1, 1e-9),
                  ModelError);
  CHECK_THROWS_AS(ValidatePredictions(PredictionBatch(2, {-0.5, 1.5}), cls, 1, 1e-9),
                  ModelError);
  CHECK_THROWS_AS(ValidatePredictions(PredictionBatch(1, {1.0, 2.0}),
                                      Task::Regression(), 3, 1e-9),
                  ModelError);
  CHECK_THROWS_AS(ValidatePredictions(PredictionBatch(1, {NAN}),
                                      Task::Regression(), 1, 1e-9),
                  ModelError);
  CHECK_THROWS_AS(Task::Classification(1), InvalidArgument);
}
