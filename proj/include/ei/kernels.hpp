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

#ifndef EI_KERNELS_HPP_
#define EI_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace ei {

using TokenId = std::int32_t;

namespace kernels {

// Numeric inner loops used by the built-in predictors and the scorer.
//
// Every kernel has a scalar reference and optional vector variants. The
// reduction order is part of the kernel definition: the scalar reference
// accumulates in kLanes interleaved partial sums and combines them as
// ((s0 + s1) + (s2 + s3)) before adding the tail, which is exactly what the
// 256-bit variant computes. Variants are therefore bit-identical, not just
// close, and the equivalence tests compare with tolerance 0.
inline constexpr std::size_t kLanes = 4;

// Sum of table[ids[k]] over the row. Ids outside [0, table.size()) read as 0.
using GatherSumFn = double (*)(std::span<const double> table,
                               std::span<const TokenId> ids);

// out[k] = (baseline - excluded[k]) / baseline * 100.
using PercentChangeFn = void (*)(double baseline,
                                 std::span<const double> excluded,
                                 std::span<double> out);

struct KernelSet {
  std::string_view name;
  GatherSumFn gather_sum;
  PercentChangeFn percent_change;
};

const KernelSet& ScalarKernels();

// Null when the binary was built without the variant or the CPU lacks it.
const KernelSet* Avx2Kernels();

// Best variant for this CPU. EI_KERNELS=scalar in the environment forces
// the scalar reference.
const KernelSet& ActiveKernels();

}  // namespace kernels
}  // namespace ei

#endif  // EI_KERNELS_HPP_
