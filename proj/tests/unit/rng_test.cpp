#include "modelfuzz/rng.hpp"

#include <set>
#include <vector>

#include "doctest.h"
#include "support/stats.hpp"

using namespace modelfuzz;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed gives the same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t v = rng.below(13);
    CHECK(v < 13);
    seen.insert(v);
  }
  CHECK(seen.size() == 13);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("below is close to uniform") {
  Rng rng(2024);
  const int cells = 8;
  const int draws = 80000;
  std::vector<double> observed(cells, 0.0);
  for (int i = 0; i < draws; ++i) {
    observed[rng.below(cells)] += 1.0;
  }
  const std::vector<double> expected(cells, double(draws) / cells);
  const double stat = teststats::chi2_statistic(observed, expected);
  CHECK(teststats::chi2_pvalue(stat, cells - 1) > 0.01);
}

TEST_CASE("unit_real is in [0, 1)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.unit_real();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("chance handles the edges") {
  Rng rng(5);
  CHECK_FALSE(rng.chance(0.0));
  CHECK(rng.chance(1.0));
  int hits = 0;
  for (int i = 0; i < 100000; ++i) {
    if (rng.chance(0.25)) ++hits;
  }
  CHECK(hits > 23500);
  CHECK(hits < 26500);
}

TEST_CASE("derived streams are independent per tag") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t tag = 0; tag < 400; ++tag) {
    seeds.insert(derive_stream(99, tag));
  }
  CHECK(seeds.size() == 400);

  Rng a(derive_stream(99, stream_tag::kWarmup));
  Rng b(derive_stream(99, stream_tag::kStrategyBase));
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_SUITE_END();
