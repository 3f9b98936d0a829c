#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pass/types.hpp"

namespace pass {

struct EstimatorConfig {
  double lambda = 2.576;  // 99% normal CI multiplier
  bool fpc_enabled = true;
};

/// Uniform without-replacement sample of one stratum, column-major
/// (pred[j * size + i] is coordinate j of sampled row i).
struct StratumSample {
  int dim = 1;
  std::int64_t population = 0;  // N_i
  std::uint64_t seed = 0;
  std::vector<double> pred;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double coord(std::size_t i, int j) const {
    return pred[static_cast<std::size_t>(j) * values.size() + i];
  }
  std::vector<const double*> column_ptrs() const;
};

struct Estimate {
  double value = 0.0;
  double ci_half_width = 0.0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  std::int64_t sample_points_used = 0;
  std::int64_t partial_leaf_count = 0;
  std::int64_t skipped_population = 0;
  bool no_match = false;  // AVG/MIN/MAX with no evidence of a matching tuple
};

/// Per-tuple transform that turns SUM/COUNT/AVG into mean estimation (a
/// matching tuple contributes N, N*a, or (K/K_pred)*a respectively).
double phi(Agg kind, const Tuple& t, const Rect& query_rect, std::int64_t n,
           std::int64_t k, std::int64_t k_pred);

/// Point estimate + CLT confidence interval from a single uniform sample.
/// Hard bounds are not populated (lb/ub stay infinite).
Estimate estimate_uniform(Agg kind, const StratumSample& sample,
                          const Query& query, const EstimatorConfig& cfg);

struct StratumEstimate {
  double value = 0.0;
  double variance = 0.0;  // V_i = var(phi(S_i)) * fpc / K_i
  std::int64_t matched = 0;
  bool no_match = false;
};

/// estimate_uniform math with N -> N_i; returns the variance component
/// instead of a CI so strata can be combined.
StratumEstimate stratum_estimate(Agg kind, const StratumSample& stratum,
                                 const Query& query,
                                 const EstimatorConfig& cfg);

enum class Coverage { Covered, Partial, None };

/// One stratum's contribution to a combined estimate. `covered_sum` is the
/// stratum's exact value sum when known from aggregates; AVG combination
/// uses it so that fully covered queries reproduce the exact average.
struct StratumTerm {
  Coverage coverage = Coverage::Partial;
  double estimate = 0.0;
  double variance = 0.0;
  std::int64_t population = 0;    // N_i
  std::int64_t sample_size = 0;   // K_i
  std::int64_t matched = 0;       // matching sampled tuples
  std::optional<double> covered_sum;
};

/// Weighted combination across strata: w_i = 1 for SUM/COUNT; for AVG
/// w_i = Nhat_i / Nhat_q with Nhat_i = N_i (covered), N_i*matched/K_i
/// (partial), 0 (none). CI = lambda * sqrt(sum w_i^2 V_i).
Estimate combine_strata(Agg kind, std::span<const StratumTerm> terms,
                        const EstimatorConfig& cfg);

/// Exact SUM/COUNT/MIN/MAX of one partition.
struct AggregateSummary {
  double sum = 0.0;
  std::int64_t count = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  double avg() const { return sum / static_cast<double>(count); }
};

struct HardBounds {
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
};

/// Deterministic bounds from partition aggregates. SUM/COUNT assume
/// non-negative values (the synopsis shifts before calling when needed);
/// AVG/MIN/MAX are sign-agnostic.
HardBounds hard_bounds(Agg kind, std::span<const AggregateSummary> covered,
                       std::span<const AggregateSummary> partial);

/// Single-partition query variance used by the partitioning optimizers,
/// with the optimization sample treated as the population:
///   AVG:   (1/n_b) (1/w^2) [n_b*sumsq - sum^2]
///   SUM:   (1/n_b)         [n_b*sumsq - sum^2]
///   COUNT: SUM with t == 1
/// `bucket` is the partition's values; the query is bucket[q_begin, q_end).
double optimizer_variance(Agg kind, std::span<const double> bucket,
                          std::size_t q_begin, std::size_t q_end);

}  // namespace pass
