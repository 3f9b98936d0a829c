#include "pass/types.hpp"

#include <cmath>
#include <limits>

namespace pass {

const char* agg_name(Agg k) {
  switch (k) {
    case Agg::Sum: return "sum";
    case Agg::Count: return "count";
    case Agg::Avg: return "avg";
    case Agg::Min: return "min";
    case Agg::Max: return "max";
  }
  return "?";
}

Agg agg_from_name(const std::string& name) {
  if (name == "sum") return Agg::Sum;
  if (name == "count") return Agg::Count;
  if (name == "avg") return Agg::Avg;
  if (name == "min") return Agg::Min;
  if (name == "max") return Agg::Max;
  throw Error("unknown aggregate kind: " + name);
}

Dataset::Dataset(int dim) : dim_(dim), pred_(static_cast<std::size_t>(dim)) {
  if (dim < 1) throw Error("dataset dimension must be >= 1");
}

void Dataset::add(std::span<const double> predicate, double value) {
  if (static_cast<int>(predicate.size()) != dim_)
    throw Error("tuple dimension mismatch");
  if (!std::isfinite(value)) throw Error("non-finite aggregate value");
  for (double c : predicate)
    if (!std::isfinite(c)) throw Error("non-finite predicate coordinate");
  for (int j = 0; j < dim_; ++j) pred_[j].push_back(predicate[j]);
  values_.push_back(value);
}

void Dataset::reserve(std::size_t n) {
  for (auto& col : pred_) col.reserve(n);
  values_.reserve(n);
}

Tuple Dataset::row(std::size_t i) const {
  Tuple t;
  t.predicate.resize(dim_);
  for (int j = 0; j < dim_; ++j) t.predicate[j] = pred_[j][i];
  t.value = values_[i];
  return t;
}

std::vector<const double*> Dataset::column_ptrs() const {
  std::vector<const double*> ptrs(dim_);
  for (int j = 0; j < dim_; ++j) ptrs[j] = pred_[j].data();
  return ptrs;
}

Rect::Rect(std::vector<double> lo_, std::vector<double> hi_)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw Error("rect lo/hi dimension mismatch");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (std::isnan(lo[j]) || std::isnan(hi[j])) throw Error("rect bound is NaN");
    if (lo[j] > hi[j]) throw Error("rect has lo > hi");
  }
}

Rect Rect::whole(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return Rect(std::vector<double>(dim, -inf), std::vector<double>(dim, inf));
}

Rect Rect::interval(double lo, double hi) { return Rect({lo}, {hi}); }

bool Rect::contains_point(std::span<const double> p) const {
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (p[j] < lo[j] || p[j] > hi[j]) return false;
  return true;
}

Overlap classify(const Rect& partition, const Rect& query) {
  if (partition.dim() != query.dim())
    throw Error("classify: dimension mismatch");
  bool contained = true;
  for (int j = 0; j < partition.dim(); ++j) {
    if (partition.lo[j] > query.hi[j] || partition.hi[j] < query.lo[j])
      return Overlap::Disjoint;
    contained = contained && query.lo[j] <= partition.lo[j] &&
                partition.hi[j] <= query.hi[j];
  }
  return contained ? Overlap::Contained : Overlap::Partial;
}

bool contains(const Rect& rect, const Tuple& t) {
  if (rect.dim() != static_cast<int>(t.predicate.size()))
    throw Error("contains: dimension mismatch");
  return rect.contains_point(t.predicate);
}

}  // namespace pass
