#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pass {

/// Library-level error (bad configuration, malformed input, infeasible build).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class Agg { Sum, Count, Avg, Min, Max };

const char* agg_name(Agg k);
Agg agg_from_name(const std::string& name);

/// One row: d predicate coordinates plus the aggregation value.
struct Tuple {
  std::vector<double> predicate;
  double value = 0.0;
};

/// In-memory table, stored column-major so scans vectorize.
class Dataset {
 public:
  explicit Dataset(int dim);

  void add(std::span<const double> predicate, double value);
  void reserve(std::size_t n);

  int dim() const { return dim_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& pred_column(int j) const { return pred_[j]; }
  const std::vector<double>& values() const { return values_; }
  double pred(std::size_t i, int j) const { return pred_[j][i]; }
  double value(std::size_t i) const { return values_[i]; }
  Tuple row(std::size_t i) const;

  /// Pointers to the predicate columns, for the scan kernels.
  std::vector<const double*> column_ptrs() const;

 private:
  int dim_;
  std::vector<std::vector<double>> pred_;
  std::vector<double> values_;
};

/// Axis-aligned closed box over predicate space; -inf/+inf bounds allowed.
struct Rect {
  std::vector<double> lo;
  std::vector<double> hi;

  Rect() = default;
  Rect(std::vector<double> lo_, std::vector<double> hi_);
  static Rect whole(int dim);
  static Rect interval(double lo, double hi);  // 1-D convenience

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains_point(std::span<const double> p) const;
  bool operator==(const Rect&) const = default;
};

enum class Overlap { Disjoint, Contained, Partial };

/// Purely geometric classification of `partition` against `query`:
/// Contained iff partition ⊆ query, Disjoint iff they do not intersect.
Overlap classify(const Rect& partition, const Rect& query);

bool contains(const Rect& rect, const Tuple& t);

struct Query {
  Agg kind = Agg::Sum;
  Rect rect;
};

/// Partition-tree plan produced by an optimizer: preorder nodes with parent
/// links. Nodes without children are the leaves, in preorder order.
struct TreeSkeleton {
  struct Node {
    Rect rect;
    int parent = -1;
  };
  std::vector<Node> nodes;
};

}  // namespace pass
