#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pass/types.hpp"

namespace testing {

// Integer-valued aggregates keep float sums exact and order-independent.
inline pass::Dataset random_int_dataset(std::size_t n, std::uint64_t seed,
                                        int dim = 1, int vmin = -50,
                                        int vmax = 100) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::uniform_int_distribution<int> value(vmin, vmax);
  pass::Dataset data(dim);
  data.reserve(n);
  std::vector<double> pred(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j)
      pred[static_cast<std::size_t>(j)] = coord(rng);
    data.add(pred, static_cast<double>(value(rng)));
  }
  return data;
}

// Mixed continuous values (duplicates, zero runs, heavy region).
inline pass::Dataset random_mixed_dataset(std::size_t n, std::uint64_t seed,
                                          int dim = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> heavy(40.0, 15.0);
  pass::Dataset data(dim);
  data.reserve(n);
  std::vector<double> pred(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j)
      pred[static_cast<std::size_t>(j)] = coord(rng);
    const double u = unif(rng);
    double v;
    if (u < 0.4)
      v = 0.0;
    else if (u < 0.7)
      v = std::floor(unif(rng) * 10.0);
    else
      v = heavy(rng);
    data.add(pred, v);
  }
  return data;
}

inline std::vector<double> random_int_values(std::size_t n,
                                             std::uint64_t seed, int vmin = 0,
                                             int vmax = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(vmin, vmax);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(value(rng));
  return v;
}

}  // namespace testing
