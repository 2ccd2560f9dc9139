#include "modelfuzz/coverage.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "modelfuzz/rng.hpp"

using namespace modelfuzz;

namespace {

ExecutionTrace trace_of(std::initializer_list<EdgeId> edges,
                        bool crashed = false) {
  ExecutionTrace t;
  t.edges = edges;
  t.crashed = crashed;
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("coverage");

TEST_CASE("bucketize maps the fixed hit-count table") {
  CHECK(bucketize(1) == 0);
  CHECK(bucketize(2) == 1);
  CHECK(bucketize(3) == 2);
  CHECK(bucketize(4) == 3);
  CHECK(bucketize(5) == 3);
  CHECK(bucketize(7) == 3);
  CHECK(bucketize(8) == 4);
  CHECK(bucketize(15) == 4);
  CHECK(bucketize(16) == 5);
  CHECK(bucketize(31) == 5);
  CHECK(bucketize(32) == 6);
  CHECK(bucketize(127) == 6);
  CHECK(bucketize(128) == 7);
  CHECK(bucketize(200) == 7);
  CHECK(bucketize(1000000) == 7);
}

TEST_CASE("bucketize rejects a zero count") {
  CHECK_THROWS_WITH_AS(bucketize(0), "edge absent", std::invalid_argument);
}

TEST_CASE("path_id examples") {
  const EdgeId e1 = make_edge(1, 2);
  const EdgeId e2 = make_edge(2, 3);

  CHECK(path_id(trace_of({e1, e2})) == path_id(trace_of({e1, e2})));
  CHECK(path_id(trace_of({e1, e2, e2})) == path_id(trace_of({e2, e1, e2})));
  CHECK(path_id(trace_of({e1})) !=
        path_id(trace_of({e1, e1, e1, e1, e1})));
}

TEST_CASE("path_id ignores trace order") {
  Rng rng(321);
  for (int iter = 0; iter < 1000; ++iter) {
    ExecutionTrace trace;
    const std::size_t len = 1 + rng.below(40);
    for (std::size_t i = 0; i < len; ++i) {
      trace.edges.push_back(make_edge(static_cast<BlockId>(rng.below(6)),
                                      static_cast<BlockId>(rng.below(6))));
    }
    ExecutionTrace shuffled = trace;
    for (std::size_t i = shuffled.edges.size(); i > 1; --i) {
      std::swap(shuffled.edges[i - 1], shuffled.edges[rng.below(i)]);
    }
    CHECK(path_id(trace) == path_id(shuffled));
  }
}

TEST_CASE("distinct bucketized maps get distinct labels") {
  // Every subset of 10 edges (hit once each) must fingerprint uniquely,
  // and bumping one edge across a bucket boundary must change the label.
  std::set<std::uint64_t> labels;
  for (unsigned mask = 1; mask < 1024; ++mask) {
    ExecutionTrace trace;
    for (unsigned bit = 0; bit < 10; ++bit) {
      if (mask & (1u << bit)) trace.edges.push_back(make_edge(bit, bit + 1));
    }
    labels.insert(path_id(trace).label);
  }
  CHECK(labels.size() == 1023);

  const EdgeId e = make_edge(5, 6);
  CHECK(path_id(trace_of({e})) != path_id(trace_of({e, e})));
}

TEST_CASE("observe tracks novelty, crashes, and first-seen order") {
  CoverageState state;
  const EdgeId e1 = make_edge(1, 2);
  const EdgeId e2 = make_edge(2, 3);

  const auto first = observe(state, trace_of({e1, e2}), 1);
  CHECK(first.is_new_path);
  const auto again = observe(state, trace_of({e1, e2}), 2);
  CHECK_FALSE(again.is_new_path);
  CHECK(again.path == first.path);
  CHECK(state.seen_paths.size() == 1);
  CHECK(state.path_first_seen.at(first.path) == 1);

  // Same edges, one bucket different: a new path and a new edge bucket.
  const auto bumped = observe(state, trace_of({e1, e1, e2}), 3);
  CHECK(bumped.is_new_path);
  CHECK(state.seen_paths.size() == 2);
  CHECK(state.edge_bucket_count == 3);

  CHECK(state.crash_count == 0);
  observe(state, trace_of({e1}, true), 4);
  CHECK(state.crash_count == 1);
}

TEST_CASE("coverage only grows") {
  CoverageState state;
  Rng rng(55);
  std::size_t paths = 0, buckets = 0;
  std::set<std::uint64_t> distinct;
  for (int i = 0; i < 500; ++i) {
    ExecutionTrace trace;
    const std::size_t len = 1 + rng.below(12);
    for (std::size_t j = 0; j < len; ++j) {
      trace.edges.push_back(make_edge(static_cast<BlockId>(rng.below(4)),
                                      static_cast<BlockId>(rng.below(4))));
    }
    const auto result = observe(state, trace, i + 1);
    distinct.insert(result.path.label);
    CHECK(state.seen_paths.size() >= paths);
    CHECK(state.edge_bucket_count >= buckets);
    paths = state.seen_paths.size();
    buckets = state.edge_bucket_count;
    CHECK(state.seen_paths.size() == distinct.size());
  }
}

TEST_SUITE_END();
