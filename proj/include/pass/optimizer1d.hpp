#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pass/estimate.hpp"
#include "pass/types.hpp"

namespace pass::opt1d {

enum class Method { NaiveDp, MonotoneDp, FastDp, EqualCount, KdGreedy };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct OptimizerConfig {
  std::int64_t k = 8;
  double delta = 0.01;   // meaningful-overlap fraction
  std::int64_t m = 0;    // optimization sample size, 0 = full data
  Method method = Method::FastDp;
  Agg opt_kind = Agg::Sum;
  std::int64_t min_partition_samples = 0;  // 0 = max(1, ceil(2*delta*m))
  std::uint64_t seed = 0;
};

/// Optimization sample sorted by predicate coordinate, with value prefix
/// sums so any window's sum / sum of squares is O(1).
struct PrefixSums {
  std::vector<double> coords;
  std::vector<double> values;
  std::vector<double> y;  // y[i] = sum of values[0, i)
  std::vector<double> z;  // z[i] = sum of squares of values[0, i)

  static PrefixSums build(std::vector<double> coords,
                          std::vector<double> values);
  /// Test convenience: values already in order, coords = 0,1,2,...
  static PrefixSums from_values(std::vector<double> values);

  std::size_t size() const { return values.size(); }
  double win_sum(std::size_t b, std::size_t e) const { return y[e] - y[b]; }
  double win_sumsq(std::size_t b, std::size_t e) const { return z[e] - z[b]; }
  /// A cut between positions c-1 and c maps to a real boundary only if the
  /// coordinates differ (equal values never split).
  bool separable_at(std::size_t c) const {
    return c > 0 && c < size() && coords[c - 1] != coords[c];
  }
};

/// Half-open sample-index window; begin == end means "none".
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool empty() const { return begin == end; }
  bool operator==(const Window&) const = default;
};

struct MaxVar {
  double variance = 0.0;
  Window window;
};

/// Variance of window [wb, we) inside bucket [b, e), O(1) via prefix sums.
double window_variance(Agg kind, const PrefixSums& p, std::size_t b,
                       std::size_t e, std::size_t wb, std::size_t we);

/// Exact maximum over all windows of length >= min_window inside [b, e).
/// Ties break to the smallest begin, then the smallest end.
MaxVar max_var_exhaustive(Agg kind, const PrefixSums& p, std::size_t b,
                          std::size_t e, std::size_t min_window);

/// Median split: evaluates the two halves of the bucket and returns the
/// larger SUM/COUNT variance (factor-1/4 guarantee vs. the exhaustive max).
MaxVar max_var_fast_sum(Agg kind, const PrefixSums& p, std::size_t b,
                        std::size_t e);

/// Range-argmax over W[g] = sum of squares of the length-D window ending at
/// g, built once per sorted sample; queried per bucket in O(1).
class AvgWindowIndex {
 public:
  AvgWindowIndex(const PrefixSums& p, std::size_t window);

  std::size_t window() const { return window_; }
  /// Leftmost g in [g_lo, g_hi] (inclusive, g = exclusive window end)
  /// maximizing W[g].
  std::size_t argmax_end(std::size_t g_lo, std::size_t g_hi) const;

 private:
  std::size_t window_;
  std::size_t base_;                                 // smallest valid g
  std::vector<double> w_;                            // w_[g - base_]
  std::vector<std::vector<std::uint32_t>> levels_;   // sparse table of argmax
};

/// Fixed-length window oracle for AVG (factor-1/4 guarantee); buckets with
/// fewer than 2*window samples report variance 0.
MaxVar max_var_fast_avg(const AvgWindowIndex& index, const PrefixSums& p,
                        std::size_t b, std::size_t e);

using VarianceOracle = std::function<MaxVar(std::size_t, std::size_t)>;

VarianceOracle make_exhaustive_oracle(Agg kind, const PrefixSums& p,
                                      std::size_t min_window);
VarianceOracle make_fast_oracle(Agg kind, const PrefixSums& p,
                                std::size_t min_window);

struct Partitioning {
  std::vector<std::size_t> cuts;  // 0 = c_0 < c_1 < ... < c_k = m
  std::vector<double> bucket_max_variance;
  double minimax = 0.0;
};

/// Exact minimax DP over all separable cut positions. Bucket sizes must be
/// >= min_bucket. Ties break toward the smaller cut.
Partitioning dp_naive(const PrefixSums& p, std::int64_t k,
                      std::size_t min_bucket, const VarianceOracle& oracle);

/// Same contract via a binary search per cell, relying on variance
/// monotonicity under bucket enlargement.
Partitioning dp_monotone(const PrefixSums& p, std::int64_t k,
                         std::size_t min_bucket, const VarianceOracle& oracle);

/// COUNT closed form: equal-size buckets (remainder to the earliest).
Partitioning equal_count_partition(std::size_t m, std::int64_t k);

/// max over window lengths w of w*(n-w)/n (the COUNT window variance).
double max_count_window_variance(std::int64_t n);

struct OptimizeResult {
  std::vector<Rect> leaves;
  Partitioning partitioning;
  std::size_t sample_size = 0;
  std::size_t delta_count = 0;  // D
  double value_shift = 0.0;
};

/// End-to-end 1-D pipeline: sample, sort, optimize, map cuts to midpoint
/// boundaries. Emitted rects are disjoint and tile (-inf, +inf).
OptimizeResult optimize(const Dataset& data, int dim_index,
                        const OptimizerConfig& cfg);

/// Boundary between two adjacent distinct sample coordinates.
double cut_between(double u, double v);

}  // namespace pass::opt1d
