#include <doctest.h>

#include <cmath>
#include <random>

#include "pass/types.hpp"

using namespace pass;

TEST_CASE("classify basic cases") {
  CHECK(classify(Rect::interval(0, 4), Rect::interval(0, 16)) ==
        Overlap::Contained);
  CHECK(classify(Rect::interval(0, 4), Rect::interval(5, 9)) ==
        Overlap::Disjoint);
  CHECK(classify(Rect::interval(0, 4), Rect::interval(2, 6)) ==
        Overlap::Partial);
  // Closed intervals: touching at one point is an intersection.
  CHECK(classify(Rect::interval(0, 4), Rect::interval(4, 9)) ==
        Overlap::Partial);
  CHECK_THROWS_AS(classify(Rect::interval(0, 1), Rect::whole(2)), Error);
}

TEST_CASE("contains is closed on both ends") {
  const Rect unit({0.0, 0.0}, {1.0, 1.0});
  CHECK(contains(unit, Tuple{{0.0, 1.0}, 0.0}));
  CHECK_FALSE(contains(Rect::interval(0, 1), Tuple{{1.0000001}, 0.0}));
  CHECK(contains(Rect::whole(1), Tuple{{12345.0}, 0.0}));
  CHECK_THROWS_AS(contains(unit, Tuple{{0.5}, 0.0}), Error);
}

TEST_CASE("classify consistent with contains on random boxes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 3);
    std::vector<double> alo(static_cast<std::size_t>(d));
    std::vector<double> ahi(static_cast<std::size_t>(d));
    std::vector<double> blo(static_cast<std::size_t>(d));
    std::vector<double> bhi(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      double x = u(rng), y = u(rng);
      alo[static_cast<std::size_t>(j)] = std::min(x, y);
      ahi[static_cast<std::size_t>(j)] = std::max(x, y);
      x = u(rng);
      y = u(rng);
      blo[static_cast<std::size_t>(j)] = std::min(x, y);
      bhi[static_cast<std::size_t>(j)] = std::max(x, y);
    }
    const Rect a(alo, ahi);
    const Rect b(blo, bhi);
    const Overlap ov = classify(a, b);

    // Sample points of a (corners + random interior) and cross-check.
    bool all_in = true;
    bool any_in = false;
    std::vector<double> p(static_cast<std::size_t>(d));
    for (int s = 0; s < 64; ++s) {
      for (int j = 0; j < d; ++j) {
        const double t = (s & (1 << j)) ? 1.0 : 0.0;
        const double frac = s < 32 ? t : u(rng) / 20.0 + 0.5;
        p[static_cast<std::size_t>(j)] =
            a.lo[static_cast<std::size_t>(j)] +
            frac * (a.hi[static_cast<std::size_t>(j)] -
                    a.lo[static_cast<std::size_t>(j)]);
      }
      const bool in = b.contains_point(p);
      all_in = all_in && in;
      any_in = any_in || in;
    }
    if (ov == Overlap::Contained) CHECK(all_in);
    if (ov == Overlap::Disjoint) CHECK_FALSE(any_in);
  }
}

TEST_CASE("mutual containment implies equality") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    double x = u(rng), y = u(rng);
    const Rect a = Rect::interval(std::min(x, y), std::max(x, y));
    x = u(rng);
    y = u(rng);
    const Rect b = Rect::interval(std::min(x, y), std::max(x, y));
    if (classify(a, b) == Overlap::Contained &&
        classify(b, a) == Overlap::Contained)
      CHECK(a == b);
  }
}

TEST_CASE("dataset rejects bad input") {
  Dataset data(2);
  const double ok[2] = {1.0, 2.0};
  data.add(ok, 3.0);
  CHECK(data.size() == 1);
  const double bad[2] = {1.0, std::nan("")};
  CHECK_THROWS_AS(data.add(bad, 0.0), Error);
  const double inf[2] = {1.0, 2.0};
  CHECK_THROWS_AS(data.add(inf, std::numeric_limits<double>::infinity()),
                  Error);
  const double one[1] = {1.0};
  CHECK_THROWS_AS(data.add(std::span<const double>(one, 1), 0.0), Error);
}

TEST_CASE("rect validation") {
  CHECK_THROWS_AS(Rect({1.0}, {0.0}), Error);
  CHECK_THROWS_AS(Rect({std::nan("")}, {1.0}), Error);
  const Rect w = Rect::whole(3);
  CHECK(w.dim() == 3);
  CHECK(std::isinf(w.lo[0]));
}
