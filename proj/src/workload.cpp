#include "pass/workload.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pass/kernels.hpp"

namespace pass::bench {

std::int64_t matching_count(const Dataset& data, const Rect& rect) {
  const auto cols = data.column_ptrs();
  return kernels::masked_count(cols.data(), data.dim(), rect.lo.data(),
                               rect.hi.data(), data.size());
}

std::vector<Query> generate_workload(const Dataset& data,
                                     const WorkloadSpec& spec) {
  if (data.size() == 0) throw Error("generate_workload: empty dataset");
  if (spec.count < 1) throw Error("generate_workload: count must be >= 1");
  if (spec.min_selectivity < 0.0 || spec.min_selectivity >= 1.0)
    throw Error("generate_workload: min_selectivity must be in [0, 1)");
  if (spec.kinds.empty()) throw Error("generate_workload: no query kinds");

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> row_dist(0, data.size() - 1);
  std::uniform_int_distribution<std::size_t> kind_dist(0,
                                                       spec.kinds.size() - 1);
  const auto need = static_cast<std::int64_t>(
      std::ceil(spec.min_selectivity * static_cast<double>(data.size())));

  std::vector<Query> queries;
  queries.reserve(static_cast<std::size_t>(spec.count));
  for (std::int64_t q = 0; q < spec.count; ++q) {
    const Agg kind = spec.kinds[kind_dist(rng)];
    std::int64_t attempts = 0;
    while (true) {
      if (++attempts > spec.max_attempts_per_query)
        throw Error("generate_workload: min_selectivity infeasible");
      std::vector<double> lo(static_cast<std::size_t>(data.dim()));
      std::vector<double> hi(static_cast<std::size_t>(data.dim()));
      for (int j = 0; j < data.dim(); ++j) {
        const double a = data.pred(row_dist(rng), j);
        const double b = data.pred(row_dist(rng), j);
        lo[static_cast<std::size_t>(j)] = std::min(a, b);
        hi[static_cast<std::size_t>(j)] = std::max(a, b);
      }
      Rect rect(std::move(lo), std::move(hi));
      if (need > 0 && matching_count(data, rect) < need) continue;
      queries.push_back(Query{kind, std::move(rect)});
      break;
    }
  }
  return queries;
}

std::optional<double> ground_truth(const Dataset& data, const Query& query) {
  if (query.rect.dim() != data.dim())
    throw Error("ground_truth: dimension mismatch");
  const auto cols = data.column_ptrs();
  const auto st = kernels::masked_scan(cols.data(), data.dim(),
                                       query.rect.lo.data(),
                                       query.rect.hi.data(),
                                       data.values().data(), data.size());
  switch (query.kind) {
    case Agg::Sum:
      return st.count == 0 ? 0.0 : st.sum;
    case Agg::Count:
      return static_cast<double>(st.count);
    case Agg::Avg:
      if (st.count == 0) return std::nullopt;
      return st.sum / static_cast<double>(st.count);
    case Agg::Min:
      if (st.count == 0) return std::nullopt;
      return st.min;
    case Agg::Max:
      if (st.count == 0) return std::nullopt;
      return st.max;
  }
  return std::nullopt;
}

}  // namespace pass::bench
