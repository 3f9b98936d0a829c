#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pass/types.hpp"

namespace pass::bench {

struct WorkloadSpec {
  std::vector<Agg> kinds{Agg::Sum};  // drawn uniformly per query
  std::int64_t count = 100;
  double min_selectivity = 0.0;  // fraction of tuples a query must match
  std::uint64_t seed = 0;
  std::int64_t max_attempts_per_query = 100000;
};

/// Random rect queries with endpoints drawn from the data's own coordinate
/// values; rejected and redrawn until the exact (scanned) selectivity
/// reaches the floor. Deterministic per seed.
std::vector<Query> generate_workload(const Dataset& data,
                                     const WorkloadSpec& spec);

/// Exact full-scan aggregate; nullopt for AVG/MIN/MAX over an empty match.
std::optional<double> ground_truth(const Dataset& data, const Query& query);

std::int64_t matching_count(const Dataset& data, const Rect& rect);

}  // namespace pass::bench
