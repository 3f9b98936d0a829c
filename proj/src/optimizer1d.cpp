#include "pass/optimizer1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

namespace pass::opt1d {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* method_name(Method m) {
  switch (m) {
    case Method::NaiveDp: return "naive-dp";
    case Method::MonotoneDp: return "monotone-dp";
    case Method::FastDp: return "fast-dp";
    case Method::EqualCount: return "equal-count";
    case Method::KdGreedy: return "kd-greedy";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "naive-dp") return Method::NaiveDp;
  if (name == "monotone-dp") return Method::MonotoneDp;
  if (name == "fast-dp") return Method::FastDp;
  if (name == "equal-count") return Method::EqualCount;
  if (name == "kd-greedy") return Method::KdGreedy;
  throw Error("unknown optimizer method: " + name);
}

PrefixSums PrefixSums::build(std::vector<double> coords,
                             std::vector<double> values) {
  if (coords.size() != values.size())
    throw Error("PrefixSums: coord/value size mismatch");
  const std::size_t m = coords.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (coords[a] != coords[b]) return coords[a] < coords[b];
    return values[a] < values[b];
  });
  PrefixSums p;
  p.coords.resize(m);
  p.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    p.coords[i] = coords[idx[i]];
    p.values[i] = values[idx[i]];
  }
  p.y.assign(m + 1, 0.0);
  p.z.assign(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    p.y[i + 1] = p.y[i] + p.values[i];
    p.z[i + 1] = p.z[i] + p.values[i] * p.values[i];
  }
  return p;
}

PrefixSums PrefixSums::from_values(std::vector<double> values) {
  std::vector<double> coords(values.size());
  std::iota(coords.begin(), coords.end(), 0.0);
  return build(std::move(coords), std::move(values));
}

double window_variance(Agg kind, const PrefixSums& p, std::size_t b,
                       std::size_t e, std::size_t wb, std::size_t we) {
  if (wb >= we || wb < b || we > e)
    throw Error("window_variance: bad window");
  const double nb = static_cast<double>(e - b);
  const double len = static_cast<double>(we - wb);
  double sum;
  double sumsq;
  if (kind == Agg::Count) {
    sum = len;
    sumsq = len;
  } else {
    sum = p.win_sum(wb, we);
    sumsq = p.win_sumsq(wb, we);
  }
  const double core = (nb * sumsq - sum * sum) / nb;
  switch (kind) {
    case Agg::Sum:
    case Agg::Count:
      return core;
    case Agg::Avg:
      return core / (len * len);
    default:
      throw Error("window_variance: MIN/MAX not supported");
  }
}

MaxVar max_var_exhaustive(Agg kind, const PrefixSums& p, std::size_t b,
                          std::size_t e, std::size_t min_window) {
  MaxVar best;
  if (e - b < min_window || min_window == 0) return best;
  bool any = false;
  for (std::size_t wb = b; wb + min_window <= e; ++wb) {
    for (std::size_t we = wb + min_window; we <= e; ++we) {
      const double v = window_variance(kind, p, b, e, wb, we);
      if (!any || v > best.variance) {
        any = true;
        best.variance = v;
        best.window = {wb, we};
      }
    }
  }
  return best;
}

MaxVar max_var_fast_sum(Agg kind, const PrefixSums& p, std::size_t b,
                        std::size_t e) {
  MaxVar best;
  const std::size_t n = e - b;
  if (n < 2) return best;
  const std::size_t h = b + (n + 1) / 2;  // first half takes ceil(n/2)
  const double v1 = window_variance(kind, p, b, e, b, h);
  const double v2 = window_variance(kind, p, b, e, h, e);
  if (v1 >= v2) {
    best.variance = v1;
    best.window = {b, h};
  } else {
    best.variance = v2;
    best.window = {h, e};
  }
  return best;
}

AvgWindowIndex::AvgWindowIndex(const PrefixSums& p, std::size_t window)
    : window_(window), base_(window) {
  if (window == 0 || window > p.size())
    throw Error("AvgWindowIndex: bad window length");
  const std::size_t count = p.size() - window + 1;  // g in [window, m]
  w_.resize(count);
  for (std::size_t g = window; g <= p.size(); ++g)
    w_[g - base_] = p.win_sumsq(g - window, g);

  // Sparse table over leftmost argmax.
  std::size_t levels = 1;
  while ((std::size_t{1} << levels) <= count) ++levels;
  levels_.resize(levels);
  levels_[0].resize(count);
  for (std::size_t i = 0; i < count; ++i)
    levels_[0][i] = static_cast<std::uint32_t>(i);
  for (std::size_t l = 1; l < levels; ++l) {
    const std::size_t span = std::size_t{1} << l;
    if (span > count) break;
    levels_[l].resize(count - span + 1);
    for (std::size_t i = 0; i + span <= count; ++i) {
      const std::uint32_t a = levels_[l - 1][i];
      const std::uint32_t bdx = levels_[l - 1][i + span / 2];
      levels_[l][i] =
          (w_[bdx] > w_[a] || (w_[bdx] == w_[a] && bdx < a)) ? bdx : a;
    }
  }
}

std::size_t AvgWindowIndex::argmax_end(std::size_t g_lo,
                                       std::size_t g_hi) const {
  if (g_lo < base_ || g_hi < g_lo || g_hi - base_ >= w_.size())
    throw Error("AvgWindowIndex: query out of range");
  const std::size_t i = g_lo - base_;
  const std::size_t j = g_hi - base_;  // inclusive
  const std::size_t len = j - i + 1;
  std::size_t l = 0;
  while ((std::size_t{2} << l) <= len) ++l;
  const std::uint32_t a = levels_[l][i];
  const std::uint32_t b = levels_[l][j + 1 - (std::size_t{1} << l)];
  const std::uint32_t pick =
      (w_[b] > w_[a] || (w_[b] == w_[a] && b < a)) ? b : a;
  return pick + base_;
}

MaxVar max_var_fast_avg(const AvgWindowIndex& index, const PrefixSums& p,
                        std::size_t b, std::size_t e) {
  MaxVar best;
  const std::size_t d = index.window();
  if (e - b < 2 * d) return best;  // too few samples, report 0
  const std::size_t g = index.argmax_end(b + d, e);
  best.window = {g - d, g};
  best.variance = window_variance(Agg::Avg, p, b, e, g - d, g);
  return best;
}

VarianceOracle make_exhaustive_oracle(Agg kind, const PrefixSums& p,
                                      std::size_t min_window) {
  return [kind, &p, min_window](std::size_t b, std::size_t e) {
    return max_var_exhaustive(kind, p, b, e, min_window);
  };
}

VarianceOracle make_fast_oracle(Agg kind, const PrefixSums& p,
                                std::size_t min_window) {
  if (kind == Agg::Avg) {
    auto index = std::make_shared<AvgWindowIndex>(p, min_window);
    return [index, &p](std::size_t b, std::size_t e) {
      return max_var_fast_avg(*index, p, b, e);
    };
  }
  return [kind, &p](std::size_t b, std::size_t e) {
    return max_var_fast_sum(kind, p, b, e);
  };
}

namespace {

// Candidate cut positions: 0, m, and every separable interior position.
std::vector<std::size_t> cut_candidates(const PrefixSums& p) {
  std::vector<std::size_t> pos;
  pos.push_back(0);
  for (std::size_t c = 1; c < p.size(); ++c)
    if (p.separable_at(c)) pos.push_back(c);
  pos.push_back(p.size());
  return pos;
}

Partitioning finish_partitioning(const PrefixSums& p,
                                 std::vector<std::size_t> cuts,
                                 const VarianceOracle& oracle) {
  Partitioning part;
  part.cuts = std::move(cuts);
  part.minimax = 0.0;
  for (std::size_t j = 0; j + 1 < part.cuts.size(); ++j) {
    const double v = oracle(part.cuts[j], part.cuts[j + 1]).variance;
    part.bucket_max_variance.push_back(v);
    part.minimax = std::max(part.minimax, v);
  }
  (void)p;
  return part;
}

struct DpTable {
  // pos-index based; A has one column per bucket count.
  std::vector<std::size_t> pos;
  std::vector<std::vector<double>> value;          // value[j][pi], j in [1,k]
  std::vector<std::vector<std::uint32_t>> choice;  // predecessor pos index

  std::vector<std::size_t> reconstruct(std::int64_t k) const {
    std::vector<std::size_t> cuts(static_cast<std::size_t>(k) + 1);
    std::size_t pi = pos.size() - 1;
    cuts[static_cast<std::size_t>(k)] = pos[pi];
    for (std::int64_t j = k; j >= 2; --j) {
      pi = choice[static_cast<std::size_t>(j)][pi];
      cuts[static_cast<std::size_t>(j - 1)] = pos[pi];
    }
    cuts[0] = 0;
    return cuts;
  }
};

void check_dp_inputs(const PrefixSums& p, std::int64_t k,
                     std::size_t min_bucket) {
  if (k < 1) throw Error("dp: k must be >= 1");
  if (min_bucket < 1) throw Error("dp: min bucket size must be >= 1");
  if (p.size() < static_cast<std::size_t>(k) * min_bucket)
    throw Error("dp: infeasible (k buckets of min size exceed sample)");
}

}  // namespace

Partitioning dp_naive(const PrefixSums& p, std::int64_t k,
                      std::size_t min_bucket, const VarianceOracle& oracle) {
  check_dp_inputs(p, k, min_bucket);
  DpTable t;
  t.pos = cut_candidates(p);
  const std::size_t np = t.pos.size();
  const std::size_t kk = static_cast<std::size_t>(k);
  t.value.assign(kk + 1, std::vector<double>(np, kInf));
  t.choice.assign(kk + 1, std::vector<std::uint32_t>(np, 0));

  for (std::size_t pi = 0; pi < np; ++pi)
    if (t.pos[pi] >= min_bucket)
      t.value[1][pi] = oracle(0, t.pos[pi]).variance;

  for (std::size_t j = 2; j <= kk; ++j) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      const std::size_t end = t.pos[pi];
      if (end < j * min_bucket) continue;
      double best = kInf;
      std::uint32_t best_h = 0;
      for (std::size_t pj = 0; pj < pi; ++pj) {
        if (t.pos[pj] + min_bucket > end) break;
        if (t.value[j - 1][pj] == kInf) continue;
        const double cand = std::max(t.value[j - 1][pj],
                                     oracle(t.pos[pj], end).variance);
        if (cand < best) {
          best = cand;
          best_h = static_cast<std::uint32_t>(pj);
        }
      }
      t.value[j][pi] = best;
      t.choice[j][pi] = best_h;
    }
  }
  if (t.value[kk][np - 1] == kInf)
    throw Error("dp: infeasible after dedup of equal predicate values");
  return finish_partitioning(p, t.reconstruct(k), oracle);
}

Partitioning dp_monotone(const PrefixSums& p, std::int64_t k,
                         std::size_t min_bucket,
                         const VarianceOracle& oracle) {
  check_dp_inputs(p, k, min_bucket);
  DpTable t;
  t.pos = cut_candidates(p);
  const std::size_t np = t.pos.size();
  const std::size_t kk = static_cast<std::size_t>(k);
  t.value.assign(kk + 1, std::vector<double>(np, kInf));
  t.choice.assign(kk + 1, std::vector<std::uint32_t>(np, 0));
  // first_feasible[j] = smallest pos index with a finite A[.,j]
  std::vector<std::size_t> first_feasible(kk + 1, np);

  for (std::size_t pi = 0; pi < np; ++pi) {
    if (t.pos[pi] >= min_bucket) {
      t.value[1][pi] = oracle(0, t.pos[pi]).variance;
      if (first_feasible[1] == np) first_feasible[1] = pi;
    }
  }

  for (std::size_t j = 2; j <= kk; ++j) {
    if (first_feasible[j - 1] == np) break;
    for (std::size_t pi = 0; pi < np; ++pi) {
      const std::size_t end = t.pos[pi];
      if (end < min_bucket) continue;
      // hi: last predecessor leaving room for the final bucket.
      const std::size_t lo = first_feasible[j - 1];
      const auto it = std::upper_bound(t.pos.begin(), t.pos.begin() + pi,
                                       end - min_bucket);
      if (it == t.pos.begin()) continue;
      const std::size_t hi =
          static_cast<std::size_t>(it - t.pos.begin()) - 1;
      if (hi < lo) continue;

      const auto f = [&](std::size_t pj) { return t.value[j - 1][pj]; };
      const auto g = [&](std::size_t pj) {
        return oracle(t.pos[pj], end).variance;
      };
      // Binary search for the crossing of nondecreasing f and nonincreasing
      // g; evaluate both sides of the crossing and keep the better cut.
      std::size_t a = lo;
      std::size_t b = hi;
      while (a < b) {
        const std::size_t mid = a + (b - a) / 2;
        if (f(mid) >= g(mid))
          b = mid;
        else
          a = mid + 1;
      }
      double best = kInf;
      std::uint32_t best_h = 0;
      for (std::size_t cand : {a, a > lo ? a - 1 : a}) {
        const double v = std::max(f(cand), g(cand));
        if (v < best || (v == best && cand < best_h)) {
          best = v;
          best_h = static_cast<std::uint32_t>(cand);
        }
      }
      if (best == kInf) continue;
      t.value[j][pi] = best;
      t.choice[j][pi] = best_h;
      if (first_feasible[j] == np) first_feasible[j] = pi;
    }
  }
  if (t.value[kk][np - 1] == kInf)
    throw Error("dp: infeasible after dedup of equal predicate values");
  return finish_partitioning(p, t.reconstruct(k), oracle);
}

double max_count_window_variance(std::int64_t n) {
  // w*(n-w)/n maximized at w = n/2 (integer w).
  const double nd = static_cast<double>(n);
  const double w = static_cast<double>(n / 2);
  return w * (nd - w) / nd;
}

Partitioning equal_count_partition(std::size_t m, std::int64_t k) {
  if (k < 1 || static_cast<std::size_t>(k) > m)
    throw Error("equal_count_partition: k out of range");
  Partitioning part;
  part.cuts.push_back(0);
  const std::size_t base = m / static_cast<std::size_t>(k);
  const std::size_t rem = m % static_cast<std::size_t>(k);
  for (std::int64_t j = 0; j < k; ++j) {
    const std::size_t sz = base + (static_cast<std::size_t>(j) < rem ? 1 : 0);
    part.cuts.push_back(part.cuts.back() + sz);
    const double v = max_count_window_variance(static_cast<std::int64_t>(sz));
    part.bucket_max_variance.push_back(v);
    part.minimax = std::max(part.minimax, v);
  }
  return part;
}

double cut_between(double u, double v) {
  double c = u + (v - u) / 2.0;
  if (!(c >= u) || c >= v) c = u;  // keep u on the lower side, v above
  return c;
}

namespace {

// Slide equal-count cuts onto separable positions (nearest, ties left).
std::vector<std::size_t> snap_cuts(const PrefixSums& p,
                                   const std::vector<std::size_t>& cuts) {
  const auto pos = cut_candidates(p);
  std::vector<std::size_t> out;
  out.push_back(0);
  for (std::size_t j = 1; j + 1 < cuts.size(); ++j) {
    const std::size_t target = cuts[j];
    // nearest candidate strictly greater than the previous chosen cut
    auto it = std::upper_bound(pos.begin(), pos.end(), out.back());
    if (it == pos.end() || *it >= p.size())
      throw Error("optimize: k infeasible after dedup of equal values");
    std::size_t best = *it;
    for (auto jt = it; jt != pos.end() && *jt < p.size(); ++jt) {
      const auto dist = [&](std::size_t c) {
        return c > target ? c - target : target - c;
      };
      if (dist(*jt) < dist(best)) best = *jt;
      if (*jt >= target) break;  // candidates beyond only get farther
    }
    out.push_back(best);
  }
  out.push_back(p.size());
  return out;
}

}  // namespace

OptimizeResult optimize(const Dataset& data, int dim_index,
                        const OptimizerConfig& cfg) {
  if (dim_index < 0 || dim_index >= data.dim())
    throw Error("optimize: bad dimension index");
  if (cfg.method == Method::KdGreedy)
    throw Error("optimize: kd-greedy is handled by the kd optimizer");
  const std::size_t n = data.size();
  if (n == 0) throw Error("optimize: empty dataset");

  // Sample rows for the optimization (0 = full data).
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

  // Shift values so the optimizer sees the same non-negative values the
  // runtime estimator's bounds machinery assumes.
  double vmin = kInf;
  for (double v : data.values()) vmin = std::min(vmin, v);
  const double shift = vmin < 0.0 ? -vmin : 0.0;

  std::vector<double> coords(rows.size());
  std::vector<double> values(rows.size());
  const auto& col = data.pred_column(dim_index);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    coords[i] = col[rows[i]];
    values[i] = data.value(rows[i]) + shift;
  }
  PrefixSums prefix = PrefixSums::build(std::move(coords), std::move(values));

  const std::size_t m = prefix.size();
  const std::size_t d_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.delta * static_cast<double>(m))));
  const std::size_t min_bucket =
      cfg.min_partition_samples > 0
          ? static_cast<std::size_t>(cfg.min_partition_samples)
          : std::max<std::size_t>(1, 2 * d_count);

  Partitioning part;
  switch (cfg.method) {
    case Method::NaiveDp:
      part = dp_naive(prefix, cfg.k, min_bucket,
                      make_exhaustive_oracle(cfg.opt_kind, prefix, d_count));
      break;
    case Method::MonotoneDp:
      part = dp_monotone(prefix, cfg.k, min_bucket,
                         make_exhaustive_oracle(cfg.opt_kind, prefix, d_count));
      break;
    case Method::FastDp:
      part = dp_monotone(prefix, cfg.k, min_bucket,
                         make_fast_oracle(cfg.opt_kind, prefix, d_count));
      break;
    case Method::EqualCount: {
      auto eq = equal_count_partition(m, cfg.k);
      auto snapped = snap_cuts(prefix, eq.cuts);
      // COUNT window variance depends only on the window length; the max
      // over lengths in [D, n] of w*(n-w)/n has a closed form.
      const auto count_oracle = [d_count](std::size_t b,
                                          std::size_t e) -> MaxVar {
        MaxVar mv;
        const std::size_t n = e - b;
        if (n < d_count) return mv;
        const double nd = static_cast<double>(n);
        std::size_t w = std::clamp(n / 2, d_count, n);
        if (n / 2 < d_count) w = d_count;
        mv.variance = static_cast<double>(w) * (nd - static_cast<double>(w)) / nd;
        mv.window = {b, b + w};
        return mv;
      };
      part = finish_partitioning(prefix, std::move(snapped), count_oracle);
      break;
    }
    case Method::KdGreedy:
      break;  // unreachable
  }

  OptimizeResult res;
  res.partitioning = part;
  res.sample_size = m;
  res.delta_count = d_count;
  res.value_shift = shift;

  const std::size_t k = part.cuts.size() - 1;
  std::vector<double> bounds;  // interior cut coordinates
  for (std::size_t j = 1; j < k; ++j) {
    const std::size_t c = part.cuts[j];
    bounds.push_back(cut_between(prefix.coords[c - 1], prefix.coords[c]));
  }
  const double inf = kInf;
  for (std::size_t j = 0; j < k; ++j) {
    const double lo =
        j == 0 ? -inf : std::nextafter(bounds[j - 1], inf);
    const double hi = j + 1 == k ? inf : bounds[j];
    res.leaves.push_back(Rect({lo}, {hi}));
  }
  return res;
}

}  // namespace pass::opt1d
