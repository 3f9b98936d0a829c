#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pass/optimizer1d.hpp"
#include "pass/types.hpp"

namespace pass::kd {

struct KdConfig {
  std::int64_t k = 16;        // leaf budget
  int fanout = 0;             // 0 = 2^d (all dims split at medians), or 2
  int depth_gap_limit = 2;    // max leaf depth spread during greedy expansion
  double delta = 0.01;
  std::int64_t m = 0;         // optimization sample size, 0 = full data
  std::int64_t min_leaf_samples = 1;  // stop splitting below 2x this
  Agg opt_kind = Agg::Sum;
  std::uint64_t seed = 0;
};

/// Optimization sample, dim-major coords.
struct SamplePoints {
  int dim = 1;
  std::vector<double> coords;  // coords[j * size + i]
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double coord(std::size_t i, int j) const {
    return coords[static_cast<std::size_t>(j) * values.size() + i];
  }
};

struct KdNode {
  Rect rect;
  std::size_t begin = 0;  // range into the tree's point order
  std::size_t end = 0;
  int parent = -1;
  int depth = 0;
  std::vector<int> children;

  std::size_t size() const { return end - begin; }
  bool expandable() const { return !children.empty(); }
};

/// Balanced k-d tree over the sample (tree U). Nodes are preorder; point
/// order is permuted so every node's points are contiguous.
struct KdTree {
  SamplePoints pts;
  std::vector<KdNode> nodes;
  std::vector<std::size_t> order;  // order[i] = sample index

  int dim() const { return pts.dim; }
  double point_coord(std::size_t pos, int j) const {
    return pts.coord(order[pos], j);
  }
  double point_value(std::size_t pos) const { return pts.values[order[pos]]; }
};

KdTree build_balanced_kd(SamplePoints pts, const KdConfig& cfg);

/// Approximate max query variance inside a node. SUM/COUNT: median split on
/// the node's cycling dimension (factor 1/4). AVG: d == 1 uses the
/// fixed-length window index, d > 1 subdivides into overlapping cells of
/// exactly delta_count points and returns the max-sum-of-squares cell.
double leaf_max_variance(Agg kind, const KdTree& tree, int node,
                         std::size_t delta_count);

using KdOracle = std::function<double(const KdTree&, int)>;

KdOracle make_default_oracle(Agg kind, std::size_t delta_count);

struct GreedyResult {
  std::vector<int> frontier;  // leaf node ids of U', preorder
  std::vector<double> frontier_variance;
  double minimax = 0.0;
};

/// Expand the max-variance leaf until the leaf budget is reached, keeping
/// leaf depths within cfg.depth_gap_limit of each other.
GreedyResult greedy_expand(const KdTree& tree, const KdConfig& cfg,
                           const KdOracle& oracle);

struct KdOptimizeResult {
  std::vector<Rect> leaves;    // preorder frontier rects
  TreeSkeleton tree;           // U' — becomes the partition tree
  double minimax = 0.0;
  std::size_t sample_size = 0;
  std::size_t delta_count = 0;
  double value_shift = 0.0;
};

KdOptimizeResult optimize(const Dataset& data, const KdConfig& cfg);

}  // namespace pass::kd
