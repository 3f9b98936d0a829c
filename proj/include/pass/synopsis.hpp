#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pass/estimate.hpp"
#include "pass/types.hpp"

namespace pass {

struct PartitionNode {
  Rect rect;
  AggregateSummary summary;
  int parent = -1;
  int depth = 0;
  int leaf_index = -1;  // index into Synopsis::samples, -1 for internals
  std::vector<int> children;

  bool is_leaf() const { return children.empty(); }
};

struct BuildInfo {
  std::string method = "none";
  double delta = 0.0;
  std::int64_t m = 0;
  std::uint64_t seed = 0;
  int fanout = 2;
};

/// Partition tree with exact per-node aggregates and per-leaf stratified
/// samples. Immutable after build; answer() is safe to call concurrently.
struct Synopsis {
  std::vector<PartitionNode> nodes;  // preorder, nodes[0] = root
  std::vector<StratumSample> samples;
  int dim = 1;
  std::int64_t dataset_size = 0;
  double value_shift = 0.0;  // max(0, -min A); used by SUM hard bounds
  EstimatorConfig estimator;
  BuildInfo info;

  std::int64_t leaf_count() const {
    return static_cast<std::int64_t>(samples.size());
  }
  int height() const;  // levels (single node = 1)
  std::int64_t total_sample_size() const;
};

/// Balanced fanout-f tree over an ordered leaf partitioning. Leaf rects must
/// be disjoint and cover every tuple; each leaf gets floor(K/k) samples with
/// the remainder going to the earliest leaves.
Synopsis build(const Dataset& data, const std::vector<Rect>& leaf_rects,
               std::int64_t sample_budget, int fanout,
               const EstimatorConfig& cfg, std::uint64_t seed,
               BuildInfo info = {});

/// Same, but the optimizer's tree (e.g. the greedy k-d tree) is the
/// partition tree.
Synopsis build_with_tree(const Dataset& data, const TreeSkeleton& skeleton,
                         std::int64_t sample_budget,
                         const EstimatorConfig& cfg, std::uint64_t seed,
                         BuildInfo info = {});

struct McfResult {
  std::vector<int> cover;           // geometrically covered nodes
  std::vector<int> partial;         // partially overlapped leaves
  std::vector<int> zero_var_cover;  // AVG only: partial nodes with min==max
  std::int64_t visited = 0;
};

/// Minimal coverage frontier. For AVG queries a partially overlapped node
/// whose min equals max is returned in zero_var_cover: its average is exact
/// regardless of overlap extent, but hard bounds still treat it as partial.
McfResult mcf(const Synopsis& s, const Rect& query_rect, Agg kind);

/// Full query pipeline: MCF, exact partial aggregation over covered nodes,
/// stratified estimation over partial leaves, CI from partial strata only,
/// deterministic hard bounds, skip statistics.
Estimate answer(const Synopsis& s, const Query& query);

std::string to_json(const Synopsis& s);
Synopsis synopsis_from_json(const std::string& text);
void save_synopsis(const Synopsis& s, const std::string& path);
Synopsis load_synopsis(const std::string& path);

}  // namespace pass
