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

#include <climits>

#include "ei/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define EI_HAVE_AVX2_VARIANT 1
#endif

namespace ei {
namespace kernels {

#if defined(EI_HAVE_AVX2_VARIANT)
namespace {

// No "fma" in the target list: a fused multiply-add would round differently
// from the scalar reference.
#define EI_AVX2 __attribute__((target("avx2")))

EI_AVX2 double GatherSumAvx2(std::span<const double> table,
                             std::span<const TokenId> ids) {
  if (table.size() > static_cast<std::size_t>(INT_MAX)) {
    return ScalarKernels().gather_sum(table, ids);
  }
  const __m128i lo = _mm_set1_epi32(-1);
  const __m128i hi = _mm_set1_epi32(static_cast<int>(table.size()));
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;

  const std::size_t n = ids.size();
  const std::size_t body = n - n % kLanes;
  for (std::size_t k = 0; k < body; k += kLanes) {
    const __m128i idx =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(ids.data() + k));
    const __m128i in_range =
        _mm_and_si128(_mm_cmpgt_epi32(idx, lo), _mm_cmplt_epi32(idx, hi));
    const __m256d mask = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(in_range));
    const __m256d vals =
        _mm256_mask_i32gather_pd(zero, table.data(), idx, mask, 8);
    acc = _mm256_add_pd(acc, vals);
  }

  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t k = body; k < n; ++k) {
    const TokenId id = ids[k];
    if (id >= 0 && static_cast<std::size_t>(id) < table.size()) {
      sum += table[static_cast<std::size_t>(id)];
    } else {
      sum += 0.0;
    }
  }
  return sum;
}

EI_AVX2 void PercentChangeAvx2(double baseline,
                               std::span<const double> excluded,
                               std::span<double> out) {
  const __m256d base = _mm256_set1_pd(baseline);
  const __m256d hundred = _mm256_set1_pd(100.0);
  const std::size_t n = excluded.size();
  const std::size_t body = n - n % kLanes;
  for (std::size_t k = 0; k < body; k += kLanes) {
    const __m256d x = _mm256_loadu_pd(excluded.data() + k);
    const __m256d r =
        _mm256_mul_pd(_mm256_div_pd(_mm256_sub_pd(base, x), base), hundred);
    _mm256_storeu_pd(out.data() + k, r);
  }
  for (std::size_t k = body; k < n; ++k) {
    out[k] = (baseline - excluded[k]) / baseline * 100.0;
  }
}

#undef EI_AVX2

}  // namespace

const KernelSet* Avx2Kernels() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelSet kSet{"avx2", &GatherSumAvx2, &PercentChangeAvx2};
  return supported ? &kSet : nullptr;
}

#else

const KernelSet* Avx2Kernels() { return nullptr; }

#endif

}  // namespace kernels
}  // namespace ei
