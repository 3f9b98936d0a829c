#include "pass/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace pass::bench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Full-precision, locale-independent float formatting for the CSV.
std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PASS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

const char* method_sel_name(MethodSel m) {
  switch (m) {
    case MethodSel::Uniform: return "uniform";
    case MethodSel::StratifiedEq: return "stratified-eq";
    case MethodSel::PassNaiveDp: return "pass-naive-dp";
    case MethodSel::PassMonotoneDp: return "pass-monotone-dp";
    case MethodSel::PassFastDp: return "pass-fast-dp";
    case MethodSel::PassEqualCount: return "pass-equal-count";
    case MethodSel::PassKdGreedy: return "pass-kd-greedy";
  }
  return "?";
}

MethodSel method_sel_from_name(const std::string& name) {
  for (MethodSel m :
       {MethodSel::Uniform, MethodSel::StratifiedEq, MethodSel::PassNaiveDp,
        MethodSel::PassMonotoneDp, MethodSel::PassFastDp,
        MethodSel::PassEqualCount, MethodSel::PassKdGreedy})
    if (name == method_sel_name(m)) return m;
  // CLI shorthand: bare optimizer names select the PASS variant.
  if (name == "naive-dp") return MethodSel::PassNaiveDp;
  if (name == "monotone-dp") return MethodSel::PassMonotoneDp;
  if (name == "fast-dp") return MethodSel::PassFastDp;
  if (name == "equal-count") return MethodSel::PassEqualCount;
  if (name == "kd-greedy") return MethodSel::PassKdGreedy;
  if (name == "stratified") return MethodSel::StratifiedEq;
  throw Error("unknown bench method: " + name);
}

bool method_is_pass(MethodSel m) {
  return m != MethodSel::Uniform && m != MethodSel::StratifiedEq;
}

Baseline Baseline::build(BaselineMethod method, const Dataset& data,
                         std::int64_t sample_budget, std::int64_t strata,
                         const EstimatorConfig& cfg, std::uint64_t seed) {
  if (sample_budget < 1) throw Error("baseline: sample budget must be >= 1");
  Baseline b;
  b.method_ = method;
  b.cfg_ = cfg;
  std::mt19937_64 rng(seed);

  const auto draw = [&](const std::vector<std::size_t>& rows,
                        std::size_t want) {
    const std::size_t k = std::min(want, rows.size());
    std::vector<std::size_t> pick(k);
    std::sample(rows.begin(), rows.end(), pick.begin(), k, rng);
    StratumSample s;
    s.dim = data.dim();
    s.population = static_cast<std::int64_t>(rows.size());
    s.seed = seed;
    s.values.resize(k);
    s.pred.resize(k * static_cast<std::size_t>(data.dim()));
    for (std::size_t i = 0; i < k; ++i) {
      s.values[i] = data.value(pick[i]);
      for (int j = 0; j < data.dim(); ++j)
        s.pred[static_cast<std::size_t>(j) * k + i] = data.pred(pick[i], j);
    }
    return s;
  };

  if (method == BaselineMethod::Uniform) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    b.samples_.push_back(draw(all, static_cast<std::size_t>(sample_budget)));
    return b;
  }

  // StratifiedEq: equal-population strata over dimension 0.
  if (strata < 1) throw Error("baseline: strata must be >= 1");
  const auto bcount = static_cast<std::size_t>(
      std::min<std::int64_t>(strata, static_cast<std::int64_t>(data.size())));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // B = 1 degenerates to one whole-dataset stratum; keep row order so the
  // draw coincides with the uniform baseline under the same seed.
  if (bcount > 1) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
      const double ca = data.pred(a, 0);
      const double cc = data.pred(c, 0);
      if (ca != cc) return ca < cc;
      return a < c;
    });
  }

  // Equal-depth cut positions, slid to boundaries between distinct
  // coordinates so stratum rects agree with row membership even when
  // duplicates straddle the ideal cut.
  std::vector<std::size_t> cuts{0};
  for (std::size_t sidx = 1; sidx < bcount; ++sidx) {
    const std::size_t target = sidx * data.size() / bcount;
    std::size_t best = 0;
    for (std::size_t off = 0; off < data.size(); ++off) {
      for (const std::size_t c : {target >= off ? target - off : std::size_t{0},
                                  target + off}) {
        if (c <= cuts.back() || c >= data.size()) continue;
        if (data.pred(order[c - 1], 0) != data.pred(order[c], 0)) {
          best = c;
          break;
        }
      }
      if (best != 0) break;
    }
    if (best == 0) break;  // duplicates exhausted the cuttable positions
    cuts.push_back(best);
  }
  cuts.push_back(data.size());
  const std::size_t nstrata = cuts.size() - 1;
  const std::int64_t sbase = sample_budget / static_cast<std::int64_t>(nstrata);
  const std::int64_t srem = sample_budget % static_cast<std::int64_t>(nstrata);

  double prev_hi = -kInf;
  for (std::size_t sidx = 0; sidx < nstrata; ++sidx) {
    const std::size_t begin = cuts[sidx];
    const std::size_t end = cuts[sidx + 1];
    std::vector<std::size_t> rows(order.begin() +
                                      static_cast<std::ptrdiff_t>(begin),
                                  order.begin() +
                                      static_cast<std::ptrdiff_t>(end));
    const auto want = static_cast<std::size_t>(
        sbase + (static_cast<std::int64_t>(sidx) < srem ? 1 : 0));
    b.samples_.push_back(draw(rows, std::max<std::size_t>(1, want)));

    Rect r = Rect::whole(data.dim());
    r.lo[0] = prev_hi == -kInf ? -kInf : std::nextafter(prev_hi, kInf);
    if (sidx + 1 < nstrata) {
      const double cut = opt1d::cut_between(data.pred(order[end - 1], 0),
                                            data.pred(order[end], 0));
      r.hi[0] = cut;
      prev_hi = cut;
    }
    b.strata_rects_.push_back(std::move(r));
  }
  return b;
}

Estimate Baseline::answer(const Query& query) const {
  if (method_ == BaselineMethod::Uniform) {
    Estimate e = estimate_uniform(query.kind, samples_[0], query, cfg_);
    e.lb = -kInf;
    e.ub = kInf;
    e.skipped_population = 0;
    return e;
  }

  // Stratified: combine over ALL strata; no tree, no skipping.
  Estimate e;
  if (query.kind == Agg::Min || query.kind == Agg::Max) {
    bool any = false;
    double best = query.kind == Agg::Min ? kInf : -kInf;
    for (const auto& s : samples_) {
      const StratumEstimate se = stratum_estimate(query.kind, s, query, cfg_);
      e.sample_points_used += static_cast<std::int64_t>(s.size());
      if (!se.no_match) {
        best = query.kind == Agg::Min ? std::min(best, se.value)
                                      : std::max(best, se.value);
        any = true;
      }
    }
    e.value = best;
    e.no_match = !any;
    return e;
  }

  std::vector<StratumTerm> terms;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    const Overlap ov = classify(strata_rects_[i], query.rect);
    const StratumEstimate se = stratum_estimate(query.kind, s, query, cfg_);
    e.sample_points_used += static_cast<std::int64_t>(s.size());
    StratumTerm t;
    t.population = s.population;
    t.sample_size = static_cast<std::int64_t>(s.size());
    t.matched = se.matched;
    t.coverage = ov == Overlap::Disjoint
                     ? Coverage::None
                     : (ov == Overlap::Contained ? Coverage::Covered
                                                 : Coverage::Partial);
    if (!se.no_match) {
      t.estimate = se.value;
      t.variance = se.variance;
    } else if (t.coverage == Coverage::Covered) {
      // covered but the sample matched nothing (cannot happen: covered
      // strata match all their samples); keep weight anyway
      t.coverage = Coverage::Partial;
    }
    terms.push_back(t);
  }
  const Estimate combined = combine_strata(query.kind, terms, cfg_);
  e.value = combined.value;
  e.ci_half_width = combined.ci_half_width;
  e.no_match = combined.no_match;
  return e;
}

Synopsis build_pass(const Dataset& data, MethodSel method,
                    const BenchConfig& cfg) {
  BuildInfo info;
  info.delta = cfg.delta;
  info.m = cfg.opt_m;
  info.seed = cfg.seed;

  if (method == MethodSel::PassKdGreedy) {
    kd::KdConfig kc;
    kc.k = cfg.k;
    kc.fanout = 0;
    kc.depth_gap_limit = cfg.depth_gap_limit;
    kc.delta = cfg.delta;
    kc.m = cfg.opt_m;
    kc.opt_kind = cfg.opt_kind;
    kc.seed = cfg.seed;
    const auto r = kd::optimize(data, kc);
    info.method = "kd-greedy";
    return build_with_tree(data, r.tree, cfg.sample_budget, cfg.estimator,
                           cfg.seed, info);
  }

  opt1d::OptimizerConfig oc;
  oc.k = cfg.k;
  oc.delta = cfg.delta;
  oc.m = cfg.opt_m;
  oc.opt_kind = cfg.opt_kind;
  oc.seed = cfg.seed;
  switch (method) {
    case MethodSel::PassNaiveDp: oc.method = opt1d::Method::NaiveDp; break;
    case MethodSel::PassMonotoneDp:
      oc.method = opt1d::Method::MonotoneDp;
      break;
    case MethodSel::PassFastDp: oc.method = opt1d::Method::FastDp; break;
    case MethodSel::PassEqualCount:
      oc.method = opt1d::Method::EqualCount;
      break;
    default: throw Error("build_pass: not a PASS method");
  }
  if (data.dim() != 1)
    throw Error("build_pass: 1-D optimizers need a single predicate column");
  const auto r = opt1d::optimize(data, 0, oc);
  info.method = opt1d::method_name(oc.method);
  return build(data, r.leaves, cfg.sample_budget, cfg.fanout, cfg.estimator,
               cfg.seed, info);
}

BenchReport run_bench(const Dataset& data, const std::vector<Query>& queries,
                      const BenchConfig& cfg) {
  if (cfg.methods.empty()) throw Error("run_bench: no methods");
  BenchReport report;
  report.dataset_size = static_cast<std::int64_t>(data.size());
  report.k = cfg.k;
  report.seed = cfg.seed;
  report.sample_budget =
      cfg.sample_budget > 0
          ? cfg.sample_budget
          : std::max<std::int64_t>(
                cfg.k, static_cast<std::int64_t>(0.005 * data.size()));

  BenchConfig eff = cfg;
  eff.sample_budget = report.sample_budget;

  // Ground truths (parallel across queries).
  std::vector<std::optional<double>> truths(queries.size());
  const int workers = thread_budget(cfg.threads);
  const auto parallel_for = [&](auto&& fn) {
    if (workers <= 1) {
      for (std::size_t i = 0; i < queries.size(); ++i) fn(i);
      return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= queries.size()) return;
          fn(i);
        }
      });
    for (auto& t : pool) t.join();
  };
  parallel_for([&](std::size_t i) { truths[i] = ground_truth(data, queries[i]); });

  using clock = std::chrono::steady_clock;
  for (MethodSel method : cfg.methods) {
    MethodSummary summary;
    summary.method = method;

    const auto t0 = clock::now();
    Synopsis synopsis;
    Baseline baseline;
    if (method_is_pass(method)) {
      synopsis = build_pass(data, method, eff);
    } else {
      baseline = Baseline::build(method == MethodSel::Uniform
                                     ? BaselineMethod::Uniform
                                     : BaselineMethod::StratifiedEq,
                                 data, eff.sample_budget, eff.k, eff.estimator,
                                 eff.seed);
    }
    summary.build_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();

    std::vector<QueryRow> rows(queries.size());
    parallel_for([&](std::size_t i) {
      QueryRow row;
      row.query_index = static_cast<std::int64_t>(i);
      row.method = method;
      row.kind = queries[i].kind;
      row.truth = truths[i];
      const auto q0 = clock::now();
      row.estimate = method_is_pass(method) ? answer(synopsis, queries[i])
                                            : baseline.answer(queries[i]);
      row.latency_ms =
          std::chrono::duration<double, std::milli>(clock::now() - q0).count();
      rows[i] = std::move(row);
    });

    std::vector<double> rel_errors;
    std::vector<double> abs_zero;
    std::vector<double> ci_ratios;
    double skip_sum = 0.0;
    double latency_sum = 0.0;
    double ess_sum = 0.0;
    for (const auto& row : rows) {
      ++summary.queries;
      latency_sum += row.latency_ms;
      ess_sum += static_cast<double>(row.estimate.sample_points_used);
      skip_sum += static_cast<double>(row.estimate.skipped_population) /
                  static_cast<double>(data.size());
      if (row.estimate.no_match || !row.truth.has_value()) {
        ++summary.no_match_queries;
        continue;
      }
      const double truth = *row.truth;
      if (truth == 0.0) {
        ++summary.zero_truth_queries;
        abs_zero.push_back(std::abs(row.estimate.value));
        continue;
      }
      rel_errors.push_back(std::abs(row.estimate.value - truth) /
                           std::abs(truth));
      ci_ratios.push_back(row.estimate.ci_half_width / std::abs(truth));
    }
    summary.median_relative_error = median(std::move(rel_errors));
    summary.median_abs_error_zero_truth = median(std::move(abs_zero));
    summary.median_ci_ratio = median(std::move(ci_ratios));
    summary.mean_skip_rate = skip_sum / static_cast<double>(rows.size());
    summary.mean_latency_ms = latency_sum / static_cast<double>(rows.size());
    summary.mean_effective_samples = ess_sum / static_cast<double>(rows.size());

    report.summaries.push_back(summary);
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }

  std::sort(report.rows.begin(), report.rows.end(),
            [](const QueryRow& a, const QueryRow& b) {
              if (a.query_index != b.query_index)
                return a.query_index < b.query_index;
              return static_cast<int>(a.method) < static_cast<int>(b.method);
            });
  return report;
}

std::string report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "query_index,method,kind,truth,value,ci_half_width,lb,ub,no_match,"
         "rel_error,skip_rate,partial_leaves,sample_points\r\n";
  for (const auto& row : report.rows) {
    const bool has_truth = row.truth.has_value();
    const double truth = has_truth ? *row.truth : 0.0;
    out << row.query_index << ',' << method_sel_name(row.method) << ','
        << agg_name(row.kind) << ',' << (has_truth ? fmt(truth) : "") << ','
        << fmt(row.estimate.value) << ',' << fmt(row.estimate.ci_half_width)
        << ',' << fmt(row.estimate.lb) << ',' << fmt(row.estimate.ub) << ','
        << (row.estimate.no_match ? 1 : 0) << ',';
    if (has_truth && truth != 0.0 && !row.estimate.no_match)
      out << fmt(std::abs(row.estimate.value - truth) / std::abs(truth));
    out << ','
        << fmt(static_cast<double>(row.estimate.skipped_population) /
               static_cast<double>(report.dataset_size))
        << ',' << row.estimate.partial_leaf_count << ','
        << row.estimate.sample_points_used << "\r\n";
  }
  return out.str();
}

std::string report_json(const BenchReport& report) {
  nlohmann::json root;
  root["dataset_size"] = report.dataset_size;
  root["sample_budget"] = report.sample_budget;
  root["k"] = report.k;
  root["seed"] = report.seed;
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& s : report.summaries) {
    methods.push_back({{"method", method_sel_name(s.method)},
                       {"build_seconds", s.build_seconds},
                       {"queries", s.queries},
                       {"zero_truth_queries", s.zero_truth_queries},
                       {"no_match_queries", s.no_match_queries},
                       {"median_relative_error", s.median_relative_error},
                       {"median_abs_error_zero_truth",
                        s.median_abs_error_zero_truth},
                       {"median_ci_ratio", s.median_ci_ratio},
                       {"mean_skip_rate", s.mean_skip_rate},
                       {"mean_latency_ms", s.mean_latency_ms},
                       {"mean_effective_samples", s.mean_effective_samples}});
  }
  root["methods"] = methods;
  return root.dump(2);
}

}  // namespace pass::bench
