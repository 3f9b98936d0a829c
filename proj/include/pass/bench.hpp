#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pass/estimate.hpp"
#include "pass/optimizer1d.hpp"
#include "pass/optimizer_kd.hpp"
#include "pass/synopsis.hpp"
#include "pass/types.hpp"
#include "pass/workload.hpp"

namespace pass::bench {

enum class BaselineMethod { Uniform, StratifiedEq };

/// Sampling-only baselines: one global uniform sample, or equal-population
/// strata over dimension 0 with K/B samples each. No aggregates, no
/// skipping; hard bounds are not available (lb/ub stay infinite).
class Baseline {
 public:
  static Baseline build(BaselineMethod method, const Dataset& data,
                        std::int64_t sample_budget, std::int64_t strata,
                        const EstimatorConfig& cfg, std::uint64_t seed);

  Estimate answer(const Query& query) const;
  BaselineMethod method() const { return method_; }

 private:
  BaselineMethod method_ = BaselineMethod::Uniform;
  EstimatorConfig cfg_;
  std::vector<Rect> strata_rects_;       // empty for Uniform
  std::vector<StratumSample> samples_;   // one for Uniform, B for StratifiedEq
};

/// Method selector for the bench harness.
enum class MethodSel {
  Uniform,
  StratifiedEq,
  PassNaiveDp,
  PassMonotoneDp,
  PassFastDp,
  PassEqualCount,
  PassKdGreedy,
};

const char* method_sel_name(MethodSel m);
MethodSel method_sel_from_name(const std::string& name);
bool method_is_pass(MethodSel m);

struct BenchConfig {
  std::vector<MethodSel> methods;
  std::int64_t k = 64;              // partitions / strata
  std::int64_t sample_budget = 0;   // K; 0 = 0.5% of N (min k)
  double delta = 0.01;
  std::int64_t opt_m = 0;           // optimization sample size
  Agg opt_kind = Agg::Sum;
  int fanout = 2;                   // PASS tree fanout (1-D)
  int depth_gap_limit = 2;          // kd greedy
  EstimatorConfig estimator;
  std::uint64_t seed = 0;
  int threads = 0;                  // 0 = PASS_THREADS env or hw concurrency
};

struct QueryRow {
  std::int64_t query_index = 0;
  MethodSel method = MethodSel::Uniform;
  Agg kind = Agg::Sum;
  std::optional<double> truth;
  Estimate estimate;
  double latency_ms = 0.0;
};

struct MethodSummary {
  MethodSel method = MethodSel::Uniform;
  double build_seconds = 0.0;
  std::int64_t queries = 0;
  std::int64_t zero_truth_queries = 0;  // excluded from relative medians
  std::int64_t no_match_queries = 0;
  double median_relative_error = 0.0;
  double median_abs_error_zero_truth = 0.0;
  double median_ci_ratio = 0.0;
  double mean_skip_rate = 0.0;
  double mean_latency_ms = 0.0;
  double mean_effective_samples = 0.0;  // sample tuples touched per query
};

struct BenchReport {
  std::vector<MethodSummary> summaries;
  std::vector<QueryRow> rows;  // sorted by (query_index, method)
  std::int64_t dataset_size = 0;
  std::int64_t sample_budget = 0;
  std::int64_t k = 0;
  std::uint64_t seed = 0;
};

BenchReport run_bench(const Dataset& data, const std::vector<Query>& queries,
                      const BenchConfig& cfg);

/// Deterministic per-query detail rows (no timing columns).
std::string report_csv(const BenchReport& report);
/// Full report including timings.
std::string report_json(const BenchReport& report);

/// PASS_THREADS-capped worker count.
int thread_budget(int requested = 0);

/// Builds the configured PASS variant (optimizer + synopsis).
Synopsis build_pass(const Dataset& data, MethodSel method,
                    const BenchConfig& cfg);

}  // namespace pass::bench
