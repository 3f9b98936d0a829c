#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pass/bench.hpp"
#include "pass/csv.hpp"
#include "pass/synopsis.hpp"
#include "pass/workload.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// DIM:LO:HI with lo/hi accepting -inf / inf.
void apply_range(pass::Rect& rect, const std::string& spec) {
  const auto p1 = spec.find(':');
  const auto p2 = spec.find(':', p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    throw pass::Error("bad --range, expected DIM:LO:HI: " + spec);
  const int dim = std::stoi(spec.substr(0, p1));
  if (dim < 0 || dim >= rect.dim())
    throw pass::Error("range dimension out of bounds: " + spec);
  const auto parse = [](const std::string& s, double fallback) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s.empty()) return fallback;
    return std::stod(s);
  };
  const std::string lo_s = spec.substr(p1 + 1, p2 - p1 - 1);
  const std::string hi_s = spec.substr(p2 + 1);
  const double lo = parse(lo_s, -std::numeric_limits<double>::infinity());
  const double hi = parse(hi_s, std::numeric_limits<double>::infinity());
  if (lo > hi) throw pass::Error("range lo > hi: " + spec);
  rect.lo[static_cast<std::size_t>(dim)] = lo;
  rect.hi[static_cast<std::size_t>(dim)] = hi;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pass::Error("cannot open for writing: " + path);
  out << text;
  if (!out) throw pass::Error("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PASS: partition-aggregate synopsis with stratified samples"};
  app.require_subcommand(1);

  // -------- build --------
  auto* build_cmd = app.add_subcommand(
      "build", "Build a synopsis from a CSV file and save it as JSON");
  std::string input;
  std::string pred_cols;
  std::string agg_col;
  std::string out_path = "synopsis.json";
  std::string method = "fast-dp";
  std::string opt_kind = "sum";
  std::int64_t k = 64;
  std::int64_t samples = 0;
  std::int64_t opt_m = 0;
  double delta = 0.01;
  double lambda = 2.576;
  bool no_fpc = false;
  bool lenient = false;
  std::uint64_t seed = 0;
  int fanout = 2;
  int depth_gap = 2;
  build_cmd->add_option("--input", input, "CSV file")->required();
  build_cmd->add_option("--pred-cols", pred_cols,
                        "comma-separated predicate column names")
      ->required();
  build_cmd->add_option("--agg-col", agg_col, "aggregate column name")
      ->required();
  build_cmd->add_option("--k", k, "number of leaf partitions");
  build_cmd->add_option("--samples", samples,
                        "total sample budget K (default 0.5% of N)");
  build_cmd->add_option(
      "--method", method,
      "naive-dp|monotone-dp|fast-dp|equal-count|kd-greedy");
  build_cmd->add_option("--delta", delta, "meaningful-overlap fraction");
  build_cmd->add_option("--m", opt_m, "optimization sample size (0 = full)");
  build_cmd->add_option("--seed", seed, "RNG seed");
  build_cmd->add_option("--out", out_path, "output synopsis path");
  build_cmd->add_option("--opt-kind", opt_kind,
                        "aggregate the optimizer targets (sum|count|avg)");
  build_cmd->add_option("--lambda", lambda, "CI multiplier");
  build_cmd->add_option("--fanout", fanout, "partition tree fanout (1-D)");
  build_cmd->add_option("--depth-gap", depth_gap,
                        "kd-greedy leaf depth gap limit");
  build_cmd->add_flag("--no-fpc", no_fpc,
                      "disable the finite population correction");
  build_cmd->add_flag("--lenient", lenient, "skip malformed CSV rows");

  // -------- query --------
  auto* query_cmd =
      app.add_subcommand("query", "Answer one aggregate query from a synopsis");
  std::string synopsis_path;
  std::string kind = "sum";
  std::vector<std::string> ranges;
  query_cmd->add_option("--synopsis", synopsis_path, "synopsis JSON")
      ->required();
  query_cmd->add_option("--kind", kind, "sum|count|avg|min|max")->required();
  query_cmd->add_option("--range", ranges,
                        "DIM:LO:HI (repeatable; missing dims are unbounded)");

  // -------- bench --------
  auto* bench_cmd = app.add_subcommand(
      "bench", "Compare methods on a random workload and emit reports");
  std::string methods = "uniform,stratified-eq,pass-fast-dp";
  std::string report_paths;
  std::string kinds = "sum";
  std::int64_t queries = 2000;
  double min_selectivity = 0.0;
  bench_cmd->add_option("--input", input, "CSV file")->required();
  bench_cmd->add_option("--pred-cols", pred_cols,
                        "comma-separated predicate column names")
      ->required();
  bench_cmd->add_option("--agg-col", agg_col, "aggregate column name")
      ->required();
  bench_cmd->add_option("--methods", methods, "comma-separated method list");
  bench_cmd->add_option("--queries", queries, "workload size");
  bench_cmd->add_option("--kinds", kinds, "query kind mix, e.g. sum,avg");
  bench_cmd->add_option("--min-selectivity", min_selectivity,
                        "workload selectivity floor");
  bench_cmd->add_option("--k", k, "partitions / strata");
  bench_cmd->add_option("--samples", samples, "sample budget K");
  bench_cmd->add_option("--delta", delta, "meaningful-overlap fraction");
  bench_cmd->add_option("--m", opt_m, "optimization sample size");
  bench_cmd->add_option("--opt-kind", opt_kind, "optimizer target kind");
  bench_cmd->add_option("--seed", seed, "RNG seed");
  bench_cmd->add_option("--lambda", lambda, "CI multiplier");
  bench_cmd->add_option("--report", report_paths,
                        "output paths, e.g. out.json,out.csv");
  bench_cmd->add_flag("--lenient", lenient, "skip malformed CSV rows");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build_cmd) {
      const auto ingest = pass::io::ingest_csv(input, split_list(pred_cols),
                                               agg_col, {lenient});
      const auto& data = ingest.dataset;
      pass::bench::BenchConfig cfg;
      cfg.k = k;
      cfg.sample_budget =
          samples > 0 ? samples
                      : std::max<std::int64_t>(
                            k, static_cast<std::int64_t>(0.005 * data.size()));
      cfg.delta = delta;
      cfg.opt_m = opt_m;
      cfg.opt_kind = pass::agg_from_name(opt_kind);
      cfg.fanout = fanout;
      cfg.depth_gap_limit = depth_gap;
      cfg.estimator = {lambda, !no_fpc};
      cfg.seed = seed;
      const auto sel = pass::bench::method_sel_from_name(method);
      const pass::Synopsis s = pass::bench::build_pass(data, sel, cfg);
      pass::save_synopsis(s, out_path);
      std::cout << "built " << out_path << ": N=" << s.dataset_size
                << " leaves=" << s.leaf_count()
                << " samples=" << s.total_sample_size()
                << " height=" << s.height() << "\n";
    } else if (*query_cmd) {
      const pass::Synopsis s = pass::load_synopsis(synopsis_path);
      pass::Query q;
      q.kind = pass::agg_from_name(kind);
      q.rect = pass::Rect::whole(s.dim);
      for (const auto& r : ranges) apply_range(q.rect, r);
      const pass::Estimate e = pass::answer(s, q);
      nlohmann::json out;
      out["value"] = e.value;
      out["ci"] = e.ci_half_width;
      out["lb"] = std::isinf(e.lb) ? nlohmann::json() : nlohmann::json(e.lb);
      out["ub"] = std::isinf(e.ub) ? nlohmann::json() : nlohmann::json(e.ub);
      out["partial_leaves"] = e.partial_leaf_count;
      out["skip_rate"] = static_cast<double>(e.skipped_population) /
                         static_cast<double>(s.dataset_size);
      out["no_match"] = e.no_match;
      std::cout << out.dump(2) << "\n";
    } else if (*bench_cmd) {
      const auto ingest = pass::io::ingest_csv(input, split_list(pred_cols),
                                               agg_col, {lenient});
      const auto& data = ingest.dataset;

      pass::bench::WorkloadSpec wspec;
      wspec.kinds.clear();
      for (const auto& kname : split_list(kinds))
        wspec.kinds.push_back(pass::agg_from_name(kname));
      wspec.count = queries;
      wspec.min_selectivity = min_selectivity;
      wspec.seed = seed;
      const auto workload = pass::bench::generate_workload(data, wspec);

      pass::bench::BenchConfig cfg;
      for (const auto& mname : split_list(methods))
        cfg.methods.push_back(pass::bench::method_sel_from_name(mname));
      cfg.k = k;
      cfg.sample_budget = samples;
      cfg.delta = delta;
      cfg.opt_m = opt_m;
      cfg.opt_kind = pass::agg_from_name(opt_kind);
      cfg.estimator = {lambda, !no_fpc};
      cfg.seed = seed;
      const auto report = pass::bench::run_bench(data, workload, cfg);

      for (const auto& path : split_list(report_paths)) {
        if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
          write_file(path, pass::bench::report_csv(report));
        else
          write_file(path, pass::bench::report_json(report));
      }
      for (const auto& s : report.summaries) {
        std::printf("%-18s median_rel_err=%.6g median_ci_ratio=%.6g "
                    "skip=%.3f build=%.2fs latency=%.3fms ess=%.0f\n",
                    pass::bench::method_sel_name(s.method),
                    s.median_relative_error, s.median_ci_ratio,
                    s.mean_skip_rate, s.build_seconds, s.mean_latency_ms,
                    s.mean_effective_samples);
      }
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
