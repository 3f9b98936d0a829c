#include "pass/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "pass/kernels.hpp"

namespace pass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fpc_factor(const EstimatorConfig& cfg, std::int64_t population,
                  std::int64_t sample_size) {
  if (!cfg.fpc_enabled || population <= 1) return 1.0;
  return static_cast<double>(population - sample_size) /
         static_cast<double>(population - 1);
}

struct PhiMoments {
  double mean = 0.0;
  double variance = 0.0;  // population-style, 1/K divisor
  std::int64_t matched = 0;
  double matched_min = kInf;
  double matched_max = -kInf;
  bool no_match = false;  // AVG with K_pred == 0
};

// Mean and variance of phi over the whole sample, from the matched-subset
// scan statistics. Non-matching tuples contribute phi = 0.
PhiMoments phi_moments(Agg kind, const StratumSample& sample,
                       const Rect& rect) {
  const std::size_t k = sample.size();
  const auto cols = sample.column_ptrs();
  const kernels::ScanStats st =
      kernels::masked_scan(cols.data(), sample.dim, rect.lo.data(),
                           rect.hi.data(), sample.values.data(), k);

  PhiMoments m;
  m.matched = st.count;
  m.matched_min = st.min;
  m.matched_max = st.max;
  const double kd = static_cast<double>(k);
  const double n = static_cast<double>(sample.population);
  switch (kind) {
    case Agg::Count: {
      // phi = Pred * N
      m.mean = n * static_cast<double>(st.count) / kd;
      m.variance = n * n * static_cast<double>(st.count) / kd - m.mean * m.mean;
      break;
    }
    case Agg::Sum: {
      // phi = Pred * N * a
      m.mean = n * st.sum / kd;
      m.variance = n * n * st.sumsq / kd - m.mean * m.mean;
      break;
    }
    case Agg::Avg: {
      // phi = Pred * (K / K_pred) * a
      if (st.count == 0) {
        m.no_match = true;
        break;
      }
      const double kp = static_cast<double>(st.count);
      m.mean = st.sum / kp;
      m.variance = kd * st.sumsq / (kp * kp) - m.mean * m.mean;
      break;
    }
    case Agg::Min:
    case Agg::Max: {
      m.no_match = st.count == 0;
      m.mean = kind == Agg::Min ? st.min : st.max;
      break;
    }
  }
  m.variance = std::max(m.variance, 0.0);  // clamp catastrophic cancellation
  return m;
}

}  // namespace

std::vector<const double*> StratumSample::column_ptrs() const {
  std::vector<const double*> ptrs(dim);
  for (int j = 0; j < dim; ++j)
    ptrs[j] = pred.data() + static_cast<std::size_t>(j) * values.size();
  return ptrs;
}

double phi(Agg kind, const Tuple& t, const Rect& query_rect, std::int64_t n,
           std::int64_t k, std::int64_t k_pred) {
  if (k < 1) throw Error("phi: sample size must be >= 1");
  const double pred = contains(query_rect, t) ? 1.0 : 0.0;
  switch (kind) {
    case Agg::Count:
      return pred * static_cast<double>(n);
    case Agg::Sum:
      return pred * static_cast<double>(n) * t.value;
    case Agg::Avg:
      if (k_pred < 1) throw Error("phi: AVG with no matching sample");
      return pred * (static_cast<double>(k) / static_cast<double>(k_pred)) *
             t.value;
    case Agg::Min:
    case Agg::Max:
      throw Error("phi: MIN/MAX have no phi transform");
  }
  return 0.0;
}

Estimate estimate_uniform(Agg kind, const StratumSample& sample,
                          const Query& query, const EstimatorConfig& cfg) {
  if (sample.size() == 0) throw Error("estimate_uniform: empty sample");
  if (sample.dim != query.rect.dim())
    throw Error("estimate_uniform: dimension mismatch");

  const PhiMoments m = phi_moments(kind, sample, query.rect);
  Estimate e;
  e.sample_points_used = static_cast<std::int64_t>(sample.size());
  if (m.no_match) {
    e.no_match = true;
    return e;
  }
  e.value = m.mean;
  if (kind == Agg::Min || kind == Agg::Max) return e;  // no CLT interval
  const double fpc = fpc_factor(cfg, sample.population,
                                static_cast<std::int64_t>(sample.size()));
  e.ci_half_width =
      cfg.lambda *
      std::sqrt(fpc * m.variance / static_cast<double>(sample.size()));
  return e;
}

StratumEstimate stratum_estimate(Agg kind, const StratumSample& stratum,
                                 const Query& query,
                                 const EstimatorConfig& cfg) {
  if (stratum.size() == 0) throw Error("stratum_estimate: empty stratum");
  if (stratum.dim != query.rect.dim())
    throw Error("stratum_estimate: dimension mismatch");

  const PhiMoments m = phi_moments(kind, stratum, query.rect);
  StratumEstimate se;
  se.matched = m.matched;
  if (m.no_match) {
    se.no_match = true;
    return se;
  }
  se.value = m.mean;
  if (kind == Agg::Min || kind == Agg::Max) return se;
  const double fpc = fpc_factor(cfg, stratum.population,
                                static_cast<std::int64_t>(stratum.size()));
  se.variance = fpc * m.variance / static_cast<double>(stratum.size());
  return se;
}

Estimate combine_strata(Agg kind, std::span<const StratumTerm> terms,
                        const EstimatorConfig& cfg) {
  if (terms.empty()) throw Error("combine_strata: no strata");
  Estimate e;
  if (kind == Agg::Sum || kind == Agg::Count) {
    double value = 0.0;
    double var = 0.0;
    for (const auto& t : terms) {
      value += t.estimate;
      var += t.variance;
    }
    e.value = value;
    e.ci_half_width = cfg.lambda * std::sqrt(std::max(var, 0.0));
    return e;
  }
  if (kind != Agg::Avg)
    throw Error("combine_strata: only SUM/COUNT/AVG combine");

  // AVG: size-weighted mix, with sample-estimated sizes for partial strata.
  double nq = 0.0;
  for (const auto& t : terms) {
    switch (t.coverage) {
      case Coverage::Covered:
        nq += static_cast<double>(t.population);
        break;
      case Coverage::Partial:
        if (t.sample_size > 0)
          nq += static_cast<double>(t.population) *
                static_cast<double>(t.matched) /
                static_cast<double>(t.sample_size);
        break;
      case Coverage::None:
        break;
    }
  }
  if (nq <= 0.0) {
    e.no_match = true;
    return e;
  }
  double num = 0.0;
  double var = 0.0;
  for (const auto& t : terms) {
    if (t.coverage == Coverage::None) continue;
    double nhat = 0.0;
    if (t.coverage == Coverage::Covered) {
      nhat = static_cast<double>(t.population);
      // N_i * (sum_i / N_i) == sum_i; use the exact sum when provided.
      num += t.covered_sum ? *t.covered_sum : nhat * t.estimate;
    } else {
      if (t.sample_size <= 0 || t.matched <= 0) continue;
      nhat = static_cast<double>(t.population) *
             static_cast<double>(t.matched) /
             static_cast<double>(t.sample_size);
      num += nhat * t.estimate;
    }
    const double w = nhat / nq;
    var += w * w * t.variance;
  }
  e.value = num / nq;
  e.ci_half_width = cfg.lambda * std::sqrt(std::max(var, 0.0));
  return e;
}

HardBounds hard_bounds(Agg kind, std::span<const AggregateSummary> covered,
                       std::span<const AggregateSummary> partial) {
  HardBounds b;
  switch (kind) {
    case Agg::Sum:
    case Agg::Count: {
      double lb = 0.0;
      double extra = 0.0;
      for (const auto& s : covered)
        lb += kind == Agg::Sum ? s.sum : static_cast<double>(s.count);
      for (const auto& s : partial)
        extra += kind == Agg::Sum ? s.sum : static_cast<double>(s.count);
      b.lb = lb;
      b.ub = lb + extra;
      return b;
    }
    case Agg::Avg: {
      if (covered.empty() && partial.empty()) return b;  // (-inf, +inf)
      double lo = kInf;
      double hi = -kInf;
      if (!covered.empty()) {
        double sum = 0.0;
        std::int64_t cnt = 0;
        for (const auto& s : covered) {
          sum += s.sum;
          cnt += s.count;
        }
        const double avg = sum / static_cast<double>(cnt);
        lo = avg;
        hi = avg;
      }
      for (const auto& s : partial) {
        lo = std::min(lo, s.min);
        hi = std::max(hi, s.max);
      }
      b.lb = lo;
      b.ub = hi;
      return b;
    }
    case Agg::Min: {
      if (covered.empty() && partial.empty()) return b;
      double lb = kInf;
      double ub = kInf;
      for (const auto& s : covered) {
        lb = std::min(lb, s.min);
        ub = std::min(ub, s.min);
      }
      for (const auto& s : partial) lb = std::min(lb, s.min);
      b.lb = lb;
      b.ub = ub;
      return b;
    }
    case Agg::Max: {
      if (covered.empty() && partial.empty()) return b;
      double lb = -kInf;
      double ub = -kInf;
      for (const auto& s : covered) {
        lb = std::max(lb, s.max);
        ub = std::max(ub, s.max);
      }
      for (const auto& s : partial) ub = std::max(ub, s.max);
      b.lb = lb;
      b.ub = ub;
      return b;
    }
  }
  return b;
}

double optimizer_variance(Agg kind, std::span<const double> bucket,
                          std::size_t q_begin, std::size_t q_end) {
  if (q_begin >= q_end || q_end > bucket.size())
    throw Error("optimizer_variance: empty or out-of-range query");
  const double nb = static_cast<double>(bucket.size());
  const double w = static_cast<double>(q_end - q_begin);
  double sum = 0.0;
  double sumsq = 0.0;
  if (kind == Agg::Count) {
    sum = w;
    sumsq = w;
  } else {
    for (std::size_t i = q_begin; i < q_end; ++i) {
      sum += bucket[i];
      sumsq += bucket[i] * bucket[i];
    }
  }
  const double core = (nb * sumsq - sum * sum) / nb;
  switch (kind) {
    case Agg::Sum:
    case Agg::Count:
      return core;
    case Agg::Avg:
      return core / (w * w);
    default:
      throw Error("optimizer_variance: MIN/MAX not supported");
  }
}

}  // namespace pass
