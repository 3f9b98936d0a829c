#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pass/kernels.hpp"

using namespace pass::kernels;

namespace {

struct Columns {
  std::vector<std::vector<double>> cols;
  std::vector<double> values;
  std::vector<const double*> ptrs() const {
    std::vector<const double*> p;
    for (const auto& c : cols) p.push_back(c.data());
    return p;
  }
};

Columns random_columns(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-100.0, 100.0);
  std::normal_distribution<double> v(3.0, 25.0);
  Columns out;
  out.cols.resize(static_cast<std::size_t>(dim));
  for (auto& col : out.cols) {
    col.resize(n);
    for (auto& x : col) x = c(rng);
  }
  out.values.resize(n);
  for (auto& x : out.values) x = v(rng);
  return out;
}

}  // namespace

TEST_CASE("scalar masked scan matches a plain loop") {
  const auto data = random_columns(257, 2, 7);
  const double lo[2] = {-50.0, -80.0};
  const double hi[2] = {60.0, 10.0};
  const auto ptrs = data.ptrs();
  const ScanStats s = masked_scan_scalar(ptrs.data(), 2, lo, hi,
                                         data.values.data(), data.values.size());

  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < data.values.size(); ++i) {
    bool in = true;
    for (int j = 0; j < 2; ++j)
      in = in && data.cols[static_cast<std::size_t>(j)][i] >= lo[j] &&
           data.cols[static_cast<std::size_t>(j)][i] <= hi[j];
    if (!in) continue;
    ++count;
    sum += data.values[i];
  }
  CHECK(s.count == count);
  CHECK(s.sum == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("simd backend is equivalent to the scalar reference") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{3},
                          std::size_t{4}, std::size_t{63}, std::size_t{1024},
                          std::size_t{1027}}) {
      const int dim = 1 + static_cast<int>(seed % 3);
      const auto data = random_columns(n, dim, seed * 977 + n);
      std::vector<double> lo(static_cast<std::size_t>(dim), -40.0);
      std::vector<double> hi(static_cast<std::size_t>(dim), 55.0);
      const auto ptrs = data.ptrs();

      const ScanStats a =
          masked_scan(Backend::Scalar, ptrs.data(), dim, lo.data(), hi.data(),
                      data.values.data(), n);
      const ScanStats b =
          masked_scan(active_backend(), ptrs.data(), dim, lo.data(), hi.data(),
                      data.values.data(), n);
      CHECK(a.count == b.count);
      CHECK(a.min == b.min);  // min/max are exact in both backends
      CHECK(a.max == b.max);
      CHECK(b.sum == doctest::Approx(a.sum).epsilon(1e-12));
      CHECK(b.sumsq == doctest::Approx(a.sumsq).epsilon(1e-12));

      const ScanStats ra = range_scan(Backend::Scalar, data.values.data(), n);
      const ScanStats rb = range_scan(active_backend(), data.values.data(), n);
      CHECK(ra.count == rb.count);
      CHECK(ra.min == rb.min);
      CHECK(ra.max == rb.max);
      CHECK(rb.sum == doctest::Approx(ra.sum).epsilon(1e-12));
    }
  }
}

TEST_CASE("integer-valued data sums are exact in both backends") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> vi(-50, 100);
  std::vector<double> coords(1000);
  std::vector<double> values(1000);
  for (std::size_t i = 0; i < values.size(); ++i) {
    coords[i] = static_cast<double>(i);
    values[i] = static_cast<double>(vi(rng));
  }
  const double* col = coords.data();
  const double lo = 100.0;
  const double hi = 700.5;
  const ScanStats a = masked_scan(Backend::Scalar, &col, 1, &lo, &hi,
                                  values.data(), values.size());
  const ScanStats b = masked_scan(active_backend(), &col, 1, &lo, &hi,
                                  values.data(), values.size());
  CHECK(a.sum == b.sum);  // bit-equal: integer partial sums never round
  CHECK(a.sumsq == b.sumsq);
  CHECK(a.count == 601);
}

TEST_CASE("empty mask and null values") {
  const auto data = random_columns(100, 1, 3);
  const auto ptrs = data.ptrs();
  const double lo = 1000.0;
  const double hi = 2000.0;
  const ScanStats s = masked_scan(ptrs.data(), 1, &lo, &hi,
                                  data.values.data(), 100);
  CHECK(s.count == 0);
  CHECK(s.sum == 0.0);
  CHECK(std::isinf(s.min));

  const double wlo = -1e9;
  const double whi = 1e9;
  CHECK(masked_count(ptrs.data(), 1, &wlo, &whi, 100) == 100);
}
