#include "pass/optimizer_kd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>

namespace pass::kd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Builder {
  KdTree& tree;
  const KdConfig& cfg;
  int fanout_dims;  // 1 for fanout 2, d for fanout 2^d

  // Sort order[b, e) by (coord in dim j, sample index).
  void sort_range(std::size_t b, std::size_t e, int j) {
    std::sort(tree.order.begin() + static_cast<std::ptrdiff_t>(b),
              tree.order.begin() + static_cast<std::ptrdiff_t>(e),
              [&](std::size_t a, std::size_t c) {
                const double ca = tree.pts.coord(a, j);
                const double cc = tree.pts.coord(c, j);
                if (ca != cc) return ca < cc;
                return a < c;
              });
  }

  // Split position nearest the median where adjacent coords differ;
  // range must be sorted by dim j. Returns 0 if inseparable.
  std::size_t separable_split(std::size_t b, std::size_t e, int j) const {
    const std::size_t n = e - b;
    const std::size_t mid = b + (n + 1) / 2;  // lower half takes ceil(n/2)
    const auto ok = [&](std::size_t s) {
      return s > b && s < e &&
             tree.pts.coord(tree.order[s - 1], j) !=
                 tree.pts.coord(tree.order[s], j);
    };
    if (ok(mid)) return mid;
    for (std::size_t off = 1;; ++off) {
      const bool left_in = mid >= b + off + 1;
      const bool right_in = mid + off < e;
      if (!left_in && !right_in) return 0;
      if (left_in && ok(mid - off)) return mid - off;
      if (right_in && ok(mid + off)) return mid + off;
    }
  }

  struct Range {
    std::size_t b, e;
    Rect rect;
  };

  // Recursively split [b, e) across dims [j, j + fanout_dims); collects the
  // final child ranges.
  void split_dims(const Range& r, int start_dim, int dims_left,
                  std::vector<Range>& out) {
    if (dims_left == 0 || r.e - r.b < 2) {
      out.push_back(r);
      return;
    }
    const int j = start_dim % tree.dim();
    sort_range(r.b, r.e, j);
    const std::size_t s = separable_split(r.b, r.e, j);
    if (s == 0) {
      // This dimension cannot separate the points; try the rest.
      split_dims(r, start_dim + 1, dims_left - 1, out);
      return;
    }
    const double cut = opt1d::cut_between(tree.pts.coord(tree.order[s - 1], j),
                                          tree.pts.coord(tree.order[s], j));
    Range lo{r.b, s, r.rect};
    Range hi{s, r.e, r.rect};
    lo.rect.hi[static_cast<std::size_t>(j)] = cut;
    hi.rect.lo[static_cast<std::size_t>(j)] = std::nextafter(cut, kInf);
    split_dims(lo, start_dim + 1, dims_left - 1, out);
    split_dims(hi, start_dim + 1, dims_left - 1, out);
  }

  void build(int node_id) {
    const std::size_t b = tree.nodes[node_id].begin;
    const std::size_t e = tree.nodes[node_id].end;
    const std::size_t min_leaf =
        std::max<std::int64_t>(1, cfg.min_leaf_samples);
    if (e - b < 2 * min_leaf) return;  // leaf of U

    std::vector<Range> ranges;
    const int start_dim =
        fanout_dims == 1 ? tree.nodes[node_id].depth % tree.dim() : 0;
    split_dims(Range{b, e, tree.nodes[node_id].rect}, start_dim, fanout_dims,
               ranges);
    if (ranges.size() < 2) return;  // duplicates forced a leaf

    for (const Range& r : ranges) {
      const int child = static_cast<int>(tree.nodes.size());
      KdNode n;
      n.rect = r.rect;
      n.begin = r.b;
      n.end = r.e;
      n.parent = node_id;
      n.depth = tree.nodes[node_id].depth + 1;
      tree.nodes.push_back(std::move(n));
      tree.nodes[node_id].children.push_back(child);
      build(child);
    }
  }
};

// Node's values ordered by (coord in dim j, sample index), as prefix sums.
opt1d::PrefixSums node_prefix(const KdTree& tree, int node, int j) {
  const KdNode& nd = tree.nodes[node];
  std::vector<double> coords(nd.size());
  std::vector<double> values(nd.size());
  for (std::size_t i = 0; i < nd.size(); ++i) {
    coords[i] = tree.point_coord(nd.begin + i, j);
    values[i] = tree.point_value(nd.begin + i);
  }
  return opt1d::PrefixSums::build(std::move(coords), std::move(values));
}

// Overlapping cells of exactly `cell` points via recursive median splits
// (the AVG oracle for d > 1). Returns the variance of the max-sum-of-squares
// cell within the node.
double avg_cell_variance(const KdTree& tree, int node, std::size_t cell) {
  const KdNode& nd = tree.nodes[node];
  const std::size_t n = nd.size();
  if (n < 2 * cell) return 0.0;

  struct Item {
    std::vector<double> coords;
    double value;
  };
  std::vector<Item> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    Item& it = pts[i];
    it.coords.resize(static_cast<std::size_t>(tree.dim()));
    for (int j = 0; j < tree.dim(); ++j)
      it.coords[static_cast<std::size_t>(j)] =
          tree.point_coord(nd.begin + i, j);
    it.value = tree.point_value(nd.begin + i);
  }

  double best_sumsq = -kInf;
  double best_sum = 0.0;
  const auto consider = [&](std::size_t b, std::size_t e) {
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      sum += pts[i].value;
      sumsq += pts[i].value * pts[i].value;
    }
    if (sumsq > best_sumsq) {
      best_sumsq = sumsq;
      best_sum = sum;
    }
  };

  const std::function<void(std::size_t, std::size_t, int)> rec =
      [&](std::size_t b, std::size_t e, int depth) {
        const std::size_t sz = e - b;
        if (sz == cell) {
          consider(b, e);
          return;
        }
        const int j = depth % tree.dim();
        std::sort(pts.begin() + static_cast<std::ptrdiff_t>(b),
                  pts.begin() + static_cast<std::ptrdiff_t>(e),
                  [&](const Item& a, const Item& c) {
                    const double ca = a.coords[static_cast<std::size_t>(j)];
                    const double cc = c.coords[static_cast<std::size_t>(j)];
                    if (ca != cc) return ca < cc;
                    return a.value < c.value;
                  });
        if (sz < 2 * cell) {
          // Two overlapping cells of exactly `cell` points.
          consider(b, b + cell);
          consider(e - cell, e);
          return;
        }
        const std::size_t h = b + (sz + 1) / 2;
        rec(b, h, depth + 1);
        rec(h, e, depth + 1);
      };
  rec(0, n, nd.depth);

  const double nb = static_cast<double>(n);
  const double len = static_cast<double>(cell);
  const double core = (nb * best_sumsq - best_sum * best_sum) / nb;
  return core / (len * len);
}

}  // namespace

KdTree build_balanced_kd(SamplePoints pts, const KdConfig& cfg) {
  if (pts.size() == 0) throw Error("build_balanced_kd: no points");
  if (cfg.fanout != 0 && cfg.fanout != 2)
    throw Error("build_balanced_kd: fanout must be 0 (2^d) or 2");
  KdTree tree;
  tree.pts = std::move(pts);
  tree.order.resize(tree.pts.size());
  std::iota(tree.order.begin(), tree.order.end(), std::size_t{0});

  KdNode root;
  root.rect = Rect::whole(tree.dim());
  root.begin = 0;
  root.end = tree.pts.size();
  tree.nodes.push_back(std::move(root));

  Builder b{tree, cfg, cfg.fanout == 2 ? 1 : tree.dim()};
  b.build(0);
  return tree;
}

double leaf_max_variance(Agg kind, const KdTree& tree, int node,
                         std::size_t delta_count) {
  const KdNode& nd = tree.nodes[node];
  const int j = nd.depth % tree.dim();
  switch (kind) {
    case Agg::Sum:
    case Agg::Count: {
      if (nd.size() < 2) return 0.0;
      const auto prefix = node_prefix(tree, node, j);
      return opt1d::max_var_fast_sum(kind, prefix, 0, prefix.size()).variance;
    }
    case Agg::Avg: {
      if (nd.size() < 2 * delta_count) return 0.0;
      if (tree.dim() == 1) {
        const auto prefix = node_prefix(tree, node, 0);
        const opt1d::AvgWindowIndex index(prefix, delta_count);
        return opt1d::max_var_fast_avg(index, prefix, 0, prefix.size())
            .variance;
      }
      return avg_cell_variance(tree, node, delta_count);
    }
    default:
      throw Error("leaf_max_variance: MIN/MAX not supported");
  }
}

KdOracle make_default_oracle(Agg kind, std::size_t delta_count) {
  return [kind, delta_count](const KdTree& t, int node) {
    return leaf_max_variance(kind, t, node, delta_count);
  };
}

GreedyResult greedy_expand(const KdTree& tree, const KdConfig& cfg,
                           const KdOracle& oracle) {
  if (cfg.k < 1) throw Error("greedy_expand: k must be >= 1");

  std::vector<double> var(tree.nodes.size(),
                          std::numeric_limits<double>::quiet_NaN());
  const auto node_var = [&](int id) {
    if (std::isnan(var[static_cast<std::size_t>(id)]))
      var[static_cast<std::size_t>(id)] = oracle(tree, id);
    return var[static_cast<std::size_t>(id)];
  };

  // Max variance first; ties to the smaller preorder id.
  const auto heap_less = [](const std::pair<double, int>& a,
                            const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  };
  std::priority_queue<std::pair<double, int>,
                      std::vector<std::pair<double, int>>,
                      decltype(heap_less)>
      heap(heap_less);
  std::set<std::pair<int, int>> expandable_by_depth;  // (depth, id)
  std::vector<int> sterile;                           // U-leaves of U'
  std::int64_t leaves = 1;

  const auto add_leaf = [&](int id) {
    if (tree.nodes[static_cast<std::size_t>(id)].expandable()) {
      heap.emplace(node_var(id), id);
      expandable_by_depth.emplace(
          tree.nodes[static_cast<std::size_t>(id)].depth, id);
    } else {
      sterile.push_back(id);
    }
  };
  const auto expand = [&](int id) {
    expandable_by_depth.erase(
        {tree.nodes[static_cast<std::size_t>(id)].depth, id});
    for (int c : tree.nodes[static_cast<std::size_t>(id)].children)
      add_leaf(c);
    leaves += static_cast<std::int64_t>(
                  tree.nodes[static_cast<std::size_t>(id)].children.size()) -
              1;
  };

  add_leaf(0);

  std::vector<char> expanded(tree.nodes.size(), 0);
  while (!heap.empty()) {
    const auto [v, u] = heap.top();
    const auto fits = [&](int id) {
      return leaves + static_cast<std::int64_t>(
                          tree.nodes[static_cast<std::size_t>(id)]
                              .children.size()) -
                 1 <=
             cfg.k;
    };

    // Depth balance: expand shallow leaves before a deep expansion.
    if (cfg.depth_gap_limit > 0 && !expandable_by_depth.empty()) {
      const auto [dmin, vid] = *expandable_by_depth.begin();
      const int du = tree.nodes[static_cast<std::size_t>(u)].depth;
      if (vid != u && du - dmin >= cfg.depth_gap_limit) {
        if (!fits(vid)) break;
        expanded[static_cast<std::size_t>(vid)] = 1;
        expand(vid);
        continue;  // re-pick the max-variance leaf
      }
    }

    heap.pop();
    if (expanded[static_cast<std::size_t>(u)]) continue;  // stale entry
    if (!fits(u)) break;
    expanded[static_cast<std::size_t>(u)] = 1;
    expand(u);
  }

  GreedyResult res;
  // Frontier = nodes whose parent is expanded (or the root) and that were
  // not expanded themselves; preorder ids ascend.
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const int parent = tree.nodes[id].parent;
    const bool reached =
        id == 0 || expanded[static_cast<std::size_t>(parent)];
    if (reached && !expanded[id]) {
      res.frontier.push_back(static_cast<int>(id));
      res.frontier_variance.push_back(node_var(static_cast<int>(id)));
    }
  }
  res.minimax = 0.0;
  for (double v : res.frontier_variance) res.minimax = std::max(res.minimax, v);
  return res;
}

KdOptimizeResult optimize(const Dataset& data, const KdConfig& cfg) {
  const std::size_t n = data.size();
  if (n == 0) throw Error("kd optimize: empty dataset");

  std::vector<std::size_t> rows;
  if (cfg.m <= 0 || static_cast<std::size_t>(cfg.m) >= n) {
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    rows.resize(static_cast<std::size_t>(cfg.m));
    std::sample(all.begin(), all.end(), rows.begin(), rows.size(), rng);
  }

  double vmin = kInf;
  for (double v : data.values()) vmin = std::min(vmin, v);
  const double shift = vmin < 0.0 ? -vmin : 0.0;

  SamplePoints pts;
  pts.dim = data.dim();
  pts.values.resize(rows.size());
  pts.coords.resize(rows.size() * static_cast<std::size_t>(data.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pts.values[i] = data.value(rows[i]) + shift;
    for (int j = 0; j < data.dim(); ++j)
      pts.coords[static_cast<std::size_t>(j) * rows.size() + i] =
          data.pred(rows[i], j);
  }

  const std::size_t m = pts.size();
  const std::size_t d_count = std::max<std::size_t>(
      1,
      static_cast<std::size_t>(std::ceil(cfg.delta * static_cast<double>(m))));

  KdTree tree = build_balanced_kd(std::move(pts), cfg);
  const GreedyResult greedy =
      greedy_expand(tree, cfg, make_default_oracle(cfg.opt_kind, d_count));

  KdOptimizeResult res;
  res.minimax = greedy.minimax;
  res.sample_size = m;
  res.delta_count = d_count;
  res.value_shift = shift;

  // U' skeleton: expanded internals plus the frontier, in preorder.
  std::vector<char> in_frontier(tree.nodes.size(), 0);
  for (int id : greedy.frontier) in_frontier[static_cast<std::size_t>(id)] = 1;
  std::vector<int> remap(tree.nodes.size(), -1);
  // A node belongs to U' iff it is an ancestor-or-self of a frontier node;
  // collect by walking preorder and keeping nodes whose parent is kept and
  // is not itself a frontier node.
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const int parent = tree.nodes[id].parent;
    const bool parent_kept =
        id == 0 || (remap[static_cast<std::size_t>(parent)] >= 0 &&
                    !in_frontier[static_cast<std::size_t>(parent)]);
    if (!parent_kept) continue;
    remap[id] = static_cast<int>(res.tree.nodes.size());
    TreeSkeleton::Node sn;
    sn.rect = tree.nodes[id].rect;
    sn.parent = parent < 0 ? -1 : remap[static_cast<std::size_t>(parent)];
    res.tree.nodes.push_back(std::move(sn));
    if (in_frontier[id]) res.leaves.push_back(tree.nodes[id].rect);
  }
  return res;
}

}  // namespace pass::kd
