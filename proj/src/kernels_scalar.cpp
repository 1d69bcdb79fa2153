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

#include <array>

#include "ei/kernels.hpp"

namespace ei {
namespace kernels {
namespace {

double Lookup(std::span<const double> table, TokenId id) {
  if (id < 0 || static_cast<std::size_t>(id) >= table.size()) return 0.0;
  return table[static_cast<std::size_t>(id)];
}

double GatherSumScalar(std::span<const double> table,
                       std::span<const TokenId> ids) {
  std::array<double, kLanes> acc{};
  const std::size_t n = ids.size();
  const std::size_t body = n - n % kLanes;
  for (std::size_t k = 0; k < body; k += kLanes) {
    for (std::size_t lane = 0; lane < kLanes; ++lane) {
      acc[lane] += Lookup(table, ids[k + lane]);
    }
  }
  double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t k = body; k < n; ++k) sum += Lookup(table, ids[k]);
  return sum;
}

void PercentChangeScalar(double baseline, std::span<const double> excluded,
                         std::span<double> out) {
  for (std::size_t k = 0; k < excluded.size(); ++k) {
    out[k] = (baseline - excluded[k]) / baseline * 100.0;
  }
}

}  // namespace

const KernelSet& ScalarKernels() {
  static const KernelSet kSet{"scalar", &GatherSumScalar,
                              &PercentChangeScalar};
  return kSet;
}

}  // namespace kernels
}  // namespace ei
