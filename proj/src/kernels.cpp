#include "pass/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>

namespace pass::kernels {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

namespace {

bool cpu_has_avx2() {
#if PASS_HAVE_AVX2
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend resolve_backend() {
  const char* env = std::getenv("PASS_SIMD");
  if (env != nullptr) {
    std::string s(env);
    if (s == "scalar") return Backend::Scalar;
    if (s == "avx2" && cpu_has_avx2()) return Backend::Avx2;
    // "auto" or anything unrecognized falls through to the probe.
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

}  // namespace

Backend active_backend() {
  static const Backend b = resolve_backend();
  return b;
}

ScanStats masked_scan_scalar(const double* const* cols, int dim,
                             const double* lo, const double* hi,
                             const double* values, std::size_t n) {
  ScanStats s;
  for (std::size_t i = 0; i < n; ++i) {
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

ScanStats range_scan_scalar(const double* values, std::size_t n) {
  ScanStats s;
  s.count = static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = values[i];
    s.sum += v;
    s.sumsq += v * v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  return s;
}

ScanStats masked_scan(Backend b, const double* const* cols, int dim,
                      const double* lo, const double* hi, const double* values,
                      std::size_t n) {
#if PASS_HAVE_AVX2
  if (b == Backend::Avx2) return masked_scan_avx2(cols, dim, lo, hi, values, n);
#endif
  (void)b;
  return masked_scan_scalar(cols, dim, lo, hi, values, n);
}

ScanStats masked_scan(const double* const* cols, int dim, const double* lo,
                      const double* hi, const double* values, std::size_t n) {
  return masked_scan(active_backend(), cols, dim, lo, hi, values, n);
}

std::int64_t masked_count(const double* const* cols, int dim, const double* lo,
                          const double* hi, std::size_t n) {
  return masked_scan(active_backend(), cols, dim, lo, hi, nullptr, n).count;
}

ScanStats range_scan(Backend b, const double* values, std::size_t n) {
#if PASS_HAVE_AVX2
  if (b == Backend::Avx2) return range_scan_avx2(values, n);
#endif
  (void)b;
  return range_scan_scalar(values, n);
}

ScanStats range_scan(const double* values, std::size_t n) {
  return range_scan(active_backend(), values, n);
}

}  // namespace pass::kernels
