#include <immintrin.h>

#include <algorithm>

#include "pass/kernels.hpp"

// AVX2 variants of the scan kernels: 4 doubles per iteration, branch-free
// interval tests via compare + blend. min/max are computed with neutral
// elements (+inf/-inf) in masked-out lanes so no separate pass is needed.

namespace pass::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  return std::min(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  return std::max(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
}

}  // namespace

ScanStats masked_scan_avx2(const double* const* cols, int dim,
                           const double* lo, const double* hi,
                           const double* values, std::size_t n) {
  ScanStats s;
  const __m256d pinf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d ninf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d acc_sum = _mm256_setzero_pd();
  __m256d acc_sumsq = _mm256_setzero_pd();
  __m256d acc_min = pinf;
  __m256d acc_max = ninf;
  std::int64_t count = 0;

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    for (int j = 0; j < dim; ++j) {
      const __m256d c = _mm256_loadu_pd(cols[j] + i);
      const __m256d ge = _mm256_cmp_pd(c, _mm256_set1_pd(lo[j]), _CMP_GE_OQ);
      const __m256d le = _mm256_cmp_pd(c, _mm256_set1_pd(hi[j]), _CMP_LE_OQ);
      mask = _mm256_and_pd(mask, _mm256_and_pd(ge, le));
    }
    const int bits = _mm256_movemask_pd(mask);
    if (bits == 0) continue;
    count += __builtin_popcount(static_cast<unsigned>(bits));
    if (values != nullptr) {
      const __m256d v = _mm256_loadu_pd(values + i);
      const __m256d vm = _mm256_and_pd(v, mask);  // masked-out lanes -> +0.0
      acc_sum = _mm256_add_pd(acc_sum, vm);
      acc_sumsq = _mm256_add_pd(acc_sumsq, _mm256_mul_pd(vm, vm));
      acc_min = _mm256_min_pd(acc_min, _mm256_blendv_pd(pinf, v, mask));
      acc_max = _mm256_max_pd(acc_max, _mm256_blendv_pd(ninf, v, mask));
    }
  }

  s.count = count;
  if (values != nullptr) {
    s.sum = hsum(acc_sum);
    s.sumsq = hsum(acc_sumsq);
    s.min = hmin(acc_min);
    s.max = hmax(acc_max);
  }

  // Scalar tail.
  for (; i < n; ++i) {
    bool inside = true;
    for (int j = 0; j < dim; ++j) {
      const double c = cols[j][i];
      inside = inside && c >= lo[j] && c <= hi[j];
    }
    if (!inside) continue;
    ++s.count;
    if (values != nullptr) {
      const double v = values[i];
      s.sum += v;
      s.sumsq += v * v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
  }
  return s;
}

ScanStats range_scan_avx2(const double* values, std::size_t n) {
  ScanStats s;
  s.count = static_cast<std::int64_t>(n);
  __m256d acc_sum = _mm256_setzero_pd();
  __m256d acc_sumsq = _mm256_setzero_pd();
  __m256d acc_min = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d acc_max = _mm256_set1_pd(-std::numeric_limits<double>::infinity());

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(values + i);
    acc_sum = _mm256_add_pd(acc_sum, v);
    acc_sumsq = _mm256_add_pd(acc_sumsq, _mm256_mul_pd(v, v));
    acc_min = _mm256_min_pd(acc_min, v);
    acc_max = _mm256_max_pd(acc_max, v);
  }
  if (i > 0) {
    s.sum = hsum(acc_sum);
    s.sumsq = hsum(acc_sumsq);
    s.min = hmin(acc_min);
    s.max = hmax(acc_max);
  }
  for (; i < n; ++i) {
    const double v = values[i];
    s.sum += v;
    s.sumsq += v * v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  return s;
}

}  // namespace pass::kernels
