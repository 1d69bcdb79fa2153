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

#include <vector>

#include "ei/kernels.hpp"
#include "ei/predictor.hpp"
#include "support/test_util.hpp"

using namespace ei;
using ei::testing::Gen;

namespace {

std::vector<const kernels::KernelSet*> Variants() {
  std::vector<const kernels::KernelSet*> out{&kernels::ScalarKernels()};
  if (const auto* avx2 = kernels::Avx2Kernels()) out.push_back(avx2);
  return out;
}

}  // namespace

TEST_CASE("gather_sum reads ids outside the table as zero") {
  const std::vector<double> table{0.0, 1.5, -2.0, 4.0};
  const std::vector<TokenId> ids{1, 2, 3, 0, 7, -1, 3};
  for (const auto* k : Variants()) {
    CAPTURE(k->name);
    CHECK(k->gather_sum(table, ids) == doctest::Approx(1.5 - 2.0 + 4.0 + 4.0));
    CHECK(k->gather_sum(table, std::span<const TokenId>{}) == 0.0);
    CHECK(k->gather_sum(std::span<const double>{}, ids) == 0.0);
  }
}

TEST_CASE("percent_change matches the closed form") {
  const std::vector<double> excluded{1.0, 1.5, 2.0, -1.0, 0.0};
  std::vector<double> out(excluded.size());
  for (const auto* k : Variants()) {
    CAPTURE(k->name);
    k->percent_change(1.5, excluded, out);
    CHECK(out[0] == doctest::Approx(33.333333333333333));
    CHECK(out[2] == doctest::Approx(-33.333333333333333));
    CHECK(out[1] == 0.0);
    CHECK(out[4] == 100.0);
  }
}

TEST_CASE("vector variants are bit-identical to the scalar reference") {
  const auto* avx2 = kernels::Avx2Kernels();
  if (avx2 == nullptr) {
    MESSAGE("AVX2 unavailable on this CPU; nothing to compare");
    return;
  }
  const auto& scalar = kernels::ScalarKernels();
  Gen gen(0x5eed);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t vocab = gen.Size(1, 300);
    std::vector<double> table(vocab);
    for (auto& v : table) v = gen.Real(-1e3, 1e3);
    const std::size_t n = gen.Size(0, 257);
    std::vector<TokenId> ids(n);
    for (auto& id : ids) {
      id = static_cast<TokenId>(gen.Size(0, vocab + 5)) - (gen.Size(0, 20) == 0 ? 3 : 0);
    }
    const double a = scalar.gather_sum(table, ids);
    const double b = avx2->gather_sum(table, ids);
    REQUIRE(a == b);

    std::vector<double> excluded(n);
    for (auto& v : excluded) v = gen.Real(-10, 10);
    const double baseline = gen.Real(0.1, 10) * (gen.Coin() ? 1 : -1);
    std::vector<double> out_a(n), out_b(n);
    scalar.percent_change(baseline, excluded, out_a);
    avx2->percent_change(baseline, excluded, out_b);
    REQUIRE(out_a == out_b);
  }
}

TEST_CASE("linear predictor outputs do not depend on the kernel variant") {
  const auto* avx2 = kernels::Avx2Kernels();
  if (avx2 == nullptr) return;
  Gen gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const TokenId vocab = 40;
    const LinearModelSpec spec =
        trial % 2 ? gen.Regressor(vocab) : gen.Classifier(vocab, 3);
    LinearPredictor a(spec, kernels::ScalarKernels());
    LinearPredictor b(spec, *avx2);
    TokenMatrix rows(gen.Size(1, 70));
    for (int r = 0; r < 10; ++r) rows.AppendRow(gen.Row(rows.cols(), vocab));
    REQUIRE(a.Predict(rows) == b.Predict(rows));
  }
}

TEST_CASE("active kernels are one of the known variants") {
  const auto& active = kernels::ActiveKernels();
  CHECK((active.name == "scalar" || active.name == "avx2"));
}
