#include "pass/synopsis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "pass/kernels.hpp"

namespace pass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Assign every tuple to the single leaf rect containing it. Leaf rects are
// disjoint closed boxes tiling the domain, so "first containing" is "the"
// containing leaf; 1-D uses binary search over the (sorted) interval ends.
std::vector<std::int32_t> route_tuples(const Dataset& data,
                                       const std::vector<Rect>& leaves) {
  const std::size_t n = data.size();
  std::vector<std::int32_t> leaf_of(n, -1);
  if (data.dim() == 1) {
    std::vector<std::size_t> order(leaves.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return leaves[a].hi[0] < leaves[b].hi[0];
    });
    std::vector<double> his(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i)
      his[i] = leaves[order[i]].hi[0];
    const auto& col = data.pred_column(0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(his.begin(), his.end(), col[i]);
      if (it == his.end()) continue;
      const std::size_t li = order[static_cast<std::size_t>(it - his.begin())];
      if (col[i] >= leaves[li].lo[0])
        leaf_of[i] = static_cast<std::int32_t>(li);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const Tuple t = data.row(i);
      for (std::size_t li = 0; li < leaves.size(); ++li) {
        if (leaves[li].contains_point(t.predicate)) {
          leaf_of[i] = static_cast<std::int32_t>(li);
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (leaf_of[i] < 0)
      throw Error("build: tuple not covered by any leaf rect");
  return leaf_of;
}

struct LeafData {
  std::vector<std::vector<double>> coords;  // per leaf, dim-major flattened
  std::vector<std::vector<double>> values;
};

LeafData gather_leaves(const Dataset& data,
                       const std::vector<std::int32_t>& leaf_of,
                       std::size_t k) {
  LeafData ld;
  ld.coords.resize(k);
  ld.values.resize(k);
  std::vector<std::size_t> counts(k, 0);
  for (auto li : leaf_of) ++counts[static_cast<std::size_t>(li)];
  for (std::size_t l = 0; l < k; ++l) {
    if (counts[l] == 0) throw Error("build: optimizer emitted an empty leaf");
    ld.values[l].reserve(counts[l]);
    ld.coords[l].resize(counts[l] * static_cast<std::size_t>(data.dim()));
  }
  std::vector<std::size_t> fill(k, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto l = static_cast<std::size_t>(leaf_of[i]);
    const std::size_t pos = fill[l]++;
    ld.values[l].push_back(data.value(i));
    for (int j = 0; j < data.dim(); ++j)
      ld.coords[l][static_cast<std::size_t>(j) * counts[l] + pos] =
          data.pred(i, j);
  }
  return ld;
}

StratumSample draw_sample(const LeafData& ld, std::size_t leaf, int dim,
                          std::size_t want, std::mt19937_64& rng,
                          std::uint64_t seed_tag) {
  const std::size_t n = ld.values[leaf].size();
  const std::size_t k = std::min(want, n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> pick(k);
  std::sample(all.begin(), all.end(), pick.begin(), k, rng);

  StratumSample s;
  s.dim = dim;
  s.population = static_cast<std::int64_t>(n);
  s.seed = seed_tag;
  s.values.resize(k);
  s.pred.resize(k * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < k; ++i) {
    s.values[i] = ld.values[leaf][pick[i]];
    for (int j = 0; j < dim; ++j)
      s.pred[static_cast<std::size_t>(j) * k + i] =
          ld.coords[leaf][static_cast<std::size_t>(j) * n + pick[i]];
  }
  return s;
}

AggregateSummary summarize(const std::vector<double>& values) {
  const auto st = kernels::range_scan(values.data(), values.size());
  AggregateSummary a;
  a.sum = st.sum;
  a.count = st.count;
  a.min = st.min;
  a.max = st.max;
  return a;
}

Rect bounding_rect(const std::vector<Rect>& rects,
                   const std::vector<int>& ids,
                   const std::vector<PartitionNode>& nodes) {
  Rect r = nodes[static_cast<std::size_t>(ids.front())].rect;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const Rect& c = nodes[static_cast<std::size_t>(ids[i])].rect;
    for (int j = 0; j < r.dim(); ++j) {
      r.lo[static_cast<std::size_t>(j)] =
          std::min(r.lo[static_cast<std::size_t>(j)],
                   c.lo[static_cast<std::size_t>(j)]);
      r.hi[static_cast<std::size_t>(j)] =
          std::max(r.hi[static_cast<std::size_t>(j)],
                   c.hi[static_cast<std::size_t>(j)]);
    }
  }
  (void)rects;
  return r;
}

// Balanced fanout-f grouping over the ordered leaves; returns preorder nodes.
int build_grouped(std::vector<PartitionNode>& nodes,
                  const std::vector<Rect>& leaf_rects, std::size_t a,
                  std::size_t b, int fanout, int depth, int parent) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  nodes[static_cast<std::size_t>(id)].parent = parent;
  nodes[static_cast<std::size_t>(id)].depth = depth;
  if (b - a == 1) {
    nodes[static_cast<std::size_t>(id)].rect = leaf_rects[a];
    nodes[static_cast<std::size_t>(id)].leaf_index = static_cast<int>(a);
    return id;
  }
  const std::size_t groups =
      std::min<std::size_t>(static_cast<std::size_t>(fanout), b - a);
  const std::size_t q = (b - a + groups - 1) / groups;
  std::vector<int> children;
  for (std::size_t g = a; g < b; g += q)
    children.push_back(build_grouped(nodes, leaf_rects, g, std::min(g + q, b),
                                     fanout, depth + 1, id));
  nodes[static_cast<std::size_t>(id)].children = children;
  nodes[static_cast<std::size_t>(id)].rect =
      bounding_rect(leaf_rects, children, nodes);
  return id;
}

void fill_aggregates(Synopsis& s, const LeafData& ld) {
  // Leaves first, then internals bottom-up (reverse preorder works: every
  // child has a larger index than its parent).
  for (auto& node : s.nodes)
    if (node.is_leaf())
      node.summary = summarize(ld.values[static_cast<std::size_t>(
          node.leaf_index)]);
  for (std::size_t i = s.nodes.size(); i-- > 0;) {
    PartitionNode& node = s.nodes[i];
    if (node.is_leaf()) continue;
    AggregateSummary agg;
    agg.sum = 0.0;
    agg.count = 0;
    for (int c : node.children) {
      const auto& cs = s.nodes[static_cast<std::size_t>(c)].summary;
      agg.sum += cs.sum;
      agg.count += cs.count;
      agg.min = std::min(agg.min, cs.min);
      agg.max = std::max(agg.max, cs.max);
    }
    node.summary = agg;
  }
}

Synopsis finish_build(const Dataset& data, std::vector<PartitionNode> nodes,
                      const std::vector<Rect>& leaf_rects,
                      std::int64_t sample_budget, const EstimatorConfig& cfg,
                      std::uint64_t seed, BuildInfo info) {
  const std::size_t k = leaf_rects.size();
  if (sample_budget < static_cast<std::int64_t>(k))
    throw Error("build: sample budget below leaf count");

  const auto leaf_of = route_tuples(data, leaf_rects);
  const LeafData ld = gather_leaves(data, leaf_of, k);

  Synopsis s;
  s.nodes = std::move(nodes);
  s.dim = data.dim();
  s.dataset_size = static_cast<std::int64_t>(data.size());
  s.estimator = cfg;
  s.info = std::move(info);

  fill_aggregates(s, ld);
  s.value_shift = std::max(0.0, -s.nodes[0].summary.min);

  // floor(K/k) per leaf, remainder to the earliest leaves.
  const std::int64_t base = sample_budget / static_cast<std::int64_t>(k);
  const std::int64_t rem = sample_budget % static_cast<std::int64_t>(k);
  std::mt19937_64 rng(seed);
  s.samples.resize(k);
  for (std::size_t l = 0; l < k; ++l) {
    const auto want = static_cast<std::size_t>(
        base + (static_cast<std::int64_t>(l) < rem ? 1 : 0));
    s.samples[l] = draw_sample(ld, l, data.dim(), want, rng, seed);
  }
  return s;
}

}  // namespace

int Synopsis::height() const {
  int h = 0;
  for (const auto& n : nodes) h = std::max(h, n.depth + 1);
  return h;
}

std::int64_t Synopsis::total_sample_size() const {
  std::int64_t t = 0;
  for (const auto& s : samples) t += static_cast<std::int64_t>(s.size());
  return t;
}

Synopsis build(const Dataset& data, const std::vector<Rect>& leaf_rects,
               std::int64_t sample_budget, int fanout,
               const EstimatorConfig& cfg, std::uint64_t seed,
               BuildInfo info) {
  if (leaf_rects.empty()) throw Error("build: no leaves");
  if (fanout < 2) throw Error("build: fanout must be >= 2");
  for (const Rect& r : leaf_rects)
    if (r.dim() != data.dim()) throw Error("build: leaf dimension mismatch");

  std::vector<PartitionNode> nodes;
  build_grouped(nodes, leaf_rects, 0, leaf_rects.size(), fanout, 0, -1);
  info.fanout = fanout;
  return finish_build(data, std::move(nodes), leaf_rects, sample_budget, cfg,
                      seed, std::move(info));
}

Synopsis build_with_tree(const Dataset& data, const TreeSkeleton& skeleton,
                         std::int64_t sample_budget,
                         const EstimatorConfig& cfg, std::uint64_t seed,
                         BuildInfo info) {
  if (skeleton.nodes.empty()) throw Error("build: empty tree");
  std::vector<PartitionNode> nodes(skeleton.nodes.size());
  for (std::size_t i = 0; i < skeleton.nodes.size(); ++i) {
    nodes[i].rect = skeleton.nodes[i].rect;
    nodes[i].parent = skeleton.nodes[i].parent;
    if (nodes[i].rect.dim() != data.dim())
      throw Error("build: tree dimension mismatch");
    if (skeleton.nodes[i].parent >= 0) {
      const auto p = static_cast<std::size_t>(skeleton.nodes[i].parent);
      nodes[i].depth = nodes[p].depth + 1;
      nodes[p].children.push_back(static_cast<int>(i));
    }
  }
  std::vector<Rect> leaf_rects;
  for (auto& n : nodes)
    if (n.is_leaf()) {
      n.leaf_index = static_cast<int>(leaf_rects.size());
      leaf_rects.push_back(n.rect);
    }
  int max_fanout = 2;
  for (const auto& n : nodes)
    max_fanout = std::max(max_fanout, static_cast<int>(n.children.size()));
  info.fanout = max_fanout;
  return finish_build(data, std::move(nodes), leaf_rects, sample_budget, cfg,
                      seed, std::move(info));
}

McfResult mcf(const Synopsis& s, const Rect& query_rect, Agg kind) {
  if (query_rect.dim() != s.dim) throw Error("mcf: dimension mismatch");
  McfResult res;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const PartitionNode& node = s.nodes[static_cast<std::size_t>(id)];
    ++res.visited;
    switch (classify(node.rect, query_rect)) {
      case Overlap::Disjoint:
        break;
      case Overlap::Contained:
        res.cover.push_back(id);
        break;
      case Overlap::Partial:
        if (kind == Agg::Avg && node.summary.min == node.summary.max) {
          res.zero_var_cover.push_back(id);
        } else if (node.is_leaf()) {
          res.partial.push_back(id);
        } else {
          for (auto it = node.children.rbegin(); it != node.children.rend();
               ++it)
            stack.push_back(*it);
        }
        break;
    }
  }
  return res;
}

namespace {

AggregateSummary shifted(const AggregateSummary& a, double s) {
  AggregateSummary out = a;
  out.sum += s * static_cast<double>(a.count);
  out.min += s;
  out.max += s;
  return out;
}

}  // namespace

Estimate answer(const Synopsis& s, const Query& query) {
  if (query.rect.dim() != s.dim) throw Error("answer: dimension mismatch");
  const Agg kind = query.kind;
  const McfResult m = mcf(s, query.rect, kind);

  Estimate e;
  std::int64_t partial_population = 0;

  if (kind == Agg::Min || kind == Agg::Max) {
    bool any = false;
    double best = kind == Agg::Min ? kInf : -kInf;
    for (int id : m.cover) {
      const auto& agg = s.nodes[static_cast<std::size_t>(id)].summary;
      best = kind == Agg::Min ? std::min(best, agg.min)
                              : std::max(best, agg.max);
      any = true;
    }
    for (int id : m.partial) {
      const auto& node = s.nodes[static_cast<std::size_t>(id)];
      const auto& sample = s.samples[static_cast<std::size_t>(node.leaf_index)];
      const StratumEstimate se =
          stratum_estimate(kind, sample, query, s.estimator);
      e.sample_points_used += static_cast<std::int64_t>(sample.size());
      partial_population += node.summary.count;
      if (!se.no_match) {
        best =
            kind == Agg::Min ? std::min(best, se.value) : std::max(best, se.value);
        any = true;
      }
    }
    e.value = best;
    e.no_match = !any;
  } else {
    std::vector<StratumTerm> terms;
    for (int id : m.cover) {
      const auto& agg = s.nodes[static_cast<std::size_t>(id)].summary;
      StratumTerm t;
      t.coverage = Coverage::Covered;
      t.population = agg.count;
      t.covered_sum = agg.sum;
      switch (kind) {
        case Agg::Sum: t.estimate = agg.sum; break;
        case Agg::Count: t.estimate = static_cast<double>(agg.count); break;
        case Agg::Avg: t.estimate = agg.avg(); break;
        default: break;
      }
      terms.push_back(t);
    }
    for (int id : m.zero_var_cover) {
      // AVG only: exact average regardless of overlap extent (min == max).
      const auto& agg = s.nodes[static_cast<std::size_t>(id)].summary;
      StratumTerm t;
      t.coverage = Coverage::Covered;
      t.population = agg.count;
      t.covered_sum = agg.sum;
      t.estimate = agg.avg();
      terms.push_back(t);
    }
    for (int id : m.partial) {
      const auto& node = s.nodes[static_cast<std::size_t>(id)];
      const auto& sample = s.samples[static_cast<std::size_t>(node.leaf_index)];
      const StratumEstimate se =
          stratum_estimate(kind, sample, query, s.estimator);
      e.sample_points_used += static_cast<std::int64_t>(sample.size());
      partial_population += node.summary.count;
      StratumTerm t;
      t.coverage = Coverage::Partial;
      t.population = node.summary.count;
      t.sample_size = static_cast<std::int64_t>(sample.size());
      t.matched = se.matched;
      if (!se.no_match) {
        t.estimate = se.value;
        t.variance = se.variance;
      }
      terms.push_back(t);
    }
    if (terms.empty()) {
      e.value = 0.0;
      e.no_match = kind == Agg::Avg;
    } else {
      const Estimate combined = combine_strata(kind, terms, s.estimator);
      e.value = combined.value;
      e.ci_half_width = combined.ci_half_width;
      e.no_match = combined.no_match;
    }
  }

  // Hard bounds use the purely geometric classification; zero-variance
  // covered nodes stay on the partial side.
  std::vector<AggregateSummary> covered_agg;
  std::vector<AggregateSummary> partial_agg;
  for (int id : m.cover)
    covered_agg.push_back(s.nodes[static_cast<std::size_t>(id)].summary);
  for (int id : m.zero_var_cover)
    partial_agg.push_back(s.nodes[static_cast<std::size_t>(id)].summary);
  for (int id : m.partial)
    partial_agg.push_back(s.nodes[static_cast<std::size_t>(id)].summary);

  const double shift_v = s.value_shift;
  if (kind == Agg::Sum && shift_v > 0.0) {
    std::vector<AggregateSummary> cov_s;
    std::vector<AggregateSummary> par_s;
    for (const auto& a : covered_agg) cov_s.push_back(shifted(a, shift_v));
    for (const auto& a : partial_agg) par_s.push_back(shifted(a, shift_v));
    const HardBounds hb = hard_bounds(kind, cov_s, par_s);
    const HardBounds cb = hard_bounds(Agg::Count, covered_agg, partial_agg);
    e.lb = hb.lb - shift_v * cb.ub;
    e.ub = hb.ub - shift_v * cb.lb;
  } else {
    const HardBounds hb = hard_bounds(kind, covered_agg, partial_agg);
    e.lb = hb.lb;
    e.ub = hb.ub;
  }

  // The bounds always contain the truth, so projecting the sampled estimate
  // onto them never hurts (SUM can drift outside under sampling noise).
  if (!e.no_match &&
      (kind == Agg::Sum || kind == Agg::Count || kind == Agg::Avg))
    e.value = std::clamp(e.value, e.lb, e.ub);

  e.partial_leaf_count = static_cast<std::int64_t>(m.partial.size());
  e.skipped_population = s.dataset_size - partial_population;
  return e;
}

namespace {

using nlohmann::json;

json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double bound_from_json(const json& j, double inf_value) {
  if (j.is_null()) return inf_value;
  return j.get<double>();
}

}  // namespace

std::string to_json(const Synopsis& s) {
  json root;
  root["version"] = 1;
  root["dim"] = s.dim;
  root["dataset_size"] = s.dataset_size;
  root["value_shift"] = s.value_shift;
  root["estimator"] = {{"lambda", s.estimator.lambda},
                       {"fpc", s.estimator.fpc_enabled}};
  root["build"] = {{"method", s.info.method}, {"delta", s.info.delta},
                   {"m", s.info.m},           {"seed", s.info.seed},
                   {"fanout", s.info.fanout}};
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json jn;
    jn["parent"] = n.parent;
    json lo = json::array();
    json hi = json::array();
    for (int j = 0; j < s.dim; ++j) {
      lo.push_back(bound_to_json(n.rect.lo[static_cast<std::size_t>(j)]));
      hi.push_back(bound_to_json(n.rect.hi[static_cast<std::size_t>(j)]));
    }
    jn["lo"] = lo;
    jn["hi"] = hi;
    jn["sum"] = n.summary.sum;
    jn["count"] = n.summary.count;
    jn["min"] = n.summary.min;
    jn["max"] = n.summary.max;
    if (n.is_leaf()) {
      const auto& sample = s.samples[static_cast<std::size_t>(n.leaf_index)];
      json js;
      js["population"] = sample.population;
      js["seed"] = sample.seed;
      json pred = json::array();
      for (int j = 0; j < s.dim; ++j) {
        json col = json::array();
        for (std::size_t i = 0; i < sample.size(); ++i)
          col.push_back(sample.coord(i, j));
        pred.push_back(col);
      }
      js["pred"] = pred;
      js["values"] = sample.values;
      jn["sample"] = js;
    }
    nodes.push_back(jn);
  }
  root["nodes"] = nodes;
  return root.dump();
}

Synopsis synopsis_from_json(const std::string& text) {
  const json root = json::parse(text);
  if (root.at("version").get<int>() != 1)
    throw Error("synopsis: unsupported version");
  Synopsis s;
  s.dim = root.at("dim").get<int>();
  s.dataset_size = root.at("dataset_size").get<std::int64_t>();
  s.value_shift = root.at("value_shift").get<double>();
  s.estimator.lambda = root.at("estimator").at("lambda").get<double>();
  s.estimator.fpc_enabled = root.at("estimator").at("fpc").get<bool>();
  const auto& jb = root.at("build");
  s.info.method = jb.at("method").get<std::string>();
  s.info.delta = jb.at("delta").get<double>();
  s.info.m = jb.at("m").get<std::int64_t>();
  s.info.seed = jb.at("seed").get<std::uint64_t>();
  s.info.fanout = jb.at("fanout").get<int>();

  const auto& jnodes = root.at("nodes");
  s.nodes.resize(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto& jn = jnodes[i];
    PartitionNode& n = s.nodes[i];
    n.parent = jn.at("parent").get<int>();
    std::vector<double> lo(static_cast<std::size_t>(s.dim));
    std::vector<double> hi(static_cast<std::size_t>(s.dim));
    for (int j = 0; j < s.dim; ++j) {
      lo[static_cast<std::size_t>(j)] =
          bound_from_json(jn.at("lo")[static_cast<std::size_t>(j)], -kInf);
      hi[static_cast<std::size_t>(j)] =
          bound_from_json(jn.at("hi")[static_cast<std::size_t>(j)], kInf);
    }
    n.rect = Rect(std::move(lo), std::move(hi));
    n.summary.sum = jn.at("sum").get<double>();
    n.summary.count = jn.at("count").get<std::int64_t>();
    n.summary.min = jn.at("min").get<double>();
    n.summary.max = jn.at("max").get<double>();
    if (n.parent >= 0) {
      auto& p = s.nodes[static_cast<std::size_t>(n.parent)];
      p.children.push_back(static_cast<int>(i));
      n.depth = p.depth + 1;
    }
  }
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto& jn = jnodes[i];
    if (!jn.contains("sample")) continue;
    PartitionNode& n = s.nodes[i];
    n.leaf_index = static_cast<int>(s.samples.size());
    const auto& js = jn.at("sample");
    StratumSample sample;
    sample.dim = s.dim;
    sample.population = js.at("population").get<std::int64_t>();
    sample.seed = js.at("seed").get<std::uint64_t>();
    sample.values = js.at("values").get<std::vector<double>>();
    sample.pred.resize(sample.values.size() *
                       static_cast<std::size_t>(s.dim));
    for (int j = 0; j < s.dim; ++j) {
      const auto col =
          js.at("pred")[static_cast<std::size_t>(j)].get<std::vector<double>>();
      for (std::size_t r = 0; r < col.size(); ++r)
        sample.pred[static_cast<std::size_t>(j) * col.size() + r] = col[r];
    }
    s.samples.push_back(std::move(sample));
  }
  return s;
}

void save_synopsis(const Synopsis& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << to_json(s);
  if (!out) throw Error("write failed: " + path);
}

Synopsis load_synopsis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return synopsis_from_json(text);
}

}  // namespace pass
