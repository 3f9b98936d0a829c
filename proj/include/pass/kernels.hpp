#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

// Data-parallel scan kernels. Everything hot in the library funnels through
// these two primitives:
//
//   masked_scan : aggregate values[i] over rows whose coordinates fall inside
//                 a closed box (lo[j] <= cols[j][i] <= hi[j] for all j)
//   range_scan  : aggregate a contiguous value array (no predicate)
//
// A scalar reference implementation always exists; an AVX2 variant is
// selected at runtime when the CPU supports it. The two are equivalence-
// tested (count/min/max exact, sum/sumsq up to reassociation error).
// Set PASS_SIMD=scalar|avx2|auto to override the selection.

namespace pass::kernels {

struct ScanStats {
  double sum = 0.0;
  double sumsq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::int64_t count = 0;
};

enum class Backend { Scalar, Avx2 };

/// Backend chosen at process start (CPU probe + PASS_SIMD override).
Backend active_backend();
const char* backend_name(Backend b);

/// Columns are dim-major: cols[j] points at n coordinates of dimension j.
/// `values` may be null, in which case only `count` is meaningful.
ScanStats masked_scan(Backend b, const double* const* cols, int dim,
                      const double* lo, const double* hi,
                      const double* values, std::size_t n);
ScanStats masked_scan(const double* const* cols, int dim, const double* lo,
                      const double* hi, const double* values, std::size_t n);

std::int64_t masked_count(const double* const* cols, int dim, const double* lo,
                          const double* hi, std::size_t n);

ScanStats range_scan(Backend b, const double* values, std::size_t n);
ScanStats range_scan(const double* values, std::size_t n);

// Implementations (exposed for the equivalence tests).
ScanStats masked_scan_scalar(const double* const* cols, int dim,
                             const double* lo, const double* hi,
                             const double* values, std::size_t n);
ScanStats range_scan_scalar(const double* values, std::size_t n);
#if PASS_HAVE_AVX2
ScanStats masked_scan_avx2(const double* const* cols, int dim,
                           const double* lo, const double* hi,
                           const double* values, std::size_t n);
ScanStats range_scan_avx2(const double* values, std::size_t n);
#endif

}  // namespace pass::kernels
