#include "modelfuzz/targets.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "modelfuzz/coverage.hpp"
#include "modelfuzz/rng.hpp"

using namespace modelfuzz;

namespace {

Bytes random_input(Rng& rng, std::size_t max_len) {
  Bytes input(rng.below(max_len + 1));
  for (auto& b : input) b = rng.next_byte();
  return input;
}

}  // namespace

TEST_SUITE_BEGIN("targets");

TEST_CASE("suite has at least six distinct, well-formed targets") {
  const auto descriptors = list_targets();
  CHECK(descriptors.size() >= 6);
  std::set<std::string> names;
  for (const auto& d : descriptors) {
    names.insert(d.name);
    CHECK_FALSE(d.description.empty());
    CHECK(d.max_input_len >= 16);
    CHECK_FALSE(d.seed_corpus.empty());
    for (const Bytes& seed : d.seed_corpus) {
      CHECK(seed.size() <= d.max_input_len);
    }
  }
  CHECK(names.size() == descriptors.size());
}

TEST_CASE("unknown names are rejected") {
  CHECK_THROWS_WITH_AS(find_target("definitely-not-a-target"),
                       "no such target", std::invalid_argument);
}

TEST_CASE("execution is deterministic and bounded") {
  for (const Target& target : target_suite()) {
    CAPTURE(target.descriptor.name);
    Rng rng(1234);
    for (int i = 0; i < 1000; ++i) {
      const Bytes input = random_input(rng, target.descriptor.max_input_len);
      const ExecutionTrace first = execute(target, input);
      const ExecutionTrace second = execute(target, input);
      CHECK(first.edges == second.edges);
      CHECK(first.crashed == second.crashed);
      CHECK_FALSE(first.edges.empty());
      CHECK(first.edges.size() <= target.trace_cap);
    }
  }
}

TEST_CASE("long inputs are truncated to max_input_len") {
  for (const Target& target : target_suite()) {
    CAPTURE(target.descriptor.name);
    Rng rng(77);
    Bytes input = random_input(rng, target.descriptor.max_input_len);
    input.resize(target.descriptor.max_input_len, 0x41);
    Bytes longer = input;
    for (int i = 0; i < 32; ++i) longer.push_back(rng.next_byte());

    const ExecutionTrace a = execute(target, input);
    const ExecutionTrace b = execute(target, longer);
    CHECK(a.edges == b.edges);
    CHECK(a.crashed == b.crashed);
  }
}

TEST_CASE("seed corpus entries run clean with pairwise distinct paths") {
  for (const Target& target : target_suite()) {
    CAPTURE(target.descriptor.name);
    std::set<PathId> paths;
    for (const Bytes& seed : target.descriptor.seed_corpus) {
      const ExecutionTrace trace = execute(target, seed);
      CHECK_FALSE(trace.crashed);
      paths.insert(path_id(trace));
    }
    CHECK(paths.size() == target.descriptor.seed_corpus.size());
  }
}

TEST_CASE("targets respond to small edits of their seed corpus") {
  // Uniform random inputs rarely pass the gated targets' header checks, so
  // diversity is measured the way the fuzzer reaches it: by perturbing valid
  // corpus entries.
  for (const Target& target : target_suite()) {
    CAPTURE(target.descriptor.name);
    std::set<PathId> paths;
    Rng rng(99);
    for (const Bytes& seed : target.descriptor.seed_corpus) {
      paths.insert(path_id(execute(target, seed)));
      for (int i = 0; i < 64; ++i) {
        Bytes input = seed;
        switch (rng.below(3)) {
          case 0:
            if (!input.empty()) {
              input[rng.below(input.size())] = rng.next_byte();
            }
            break;
          case 1:
            input.resize(rng.below(input.size() + 1));
            break;
          default:
            if (input.size() < target.descriptor.max_input_len) {
              input.insert(input.begin() + rng.below(input.size() + 1),
                           rng.next_byte());
            }
            break;
        }
        paths.insert(path_id(execute(target, input)));
      }
    }
    CHECK(paths.size() >= 8);
  }
}

TEST_CASE("crashes are reachable in every target") {
  // One hand-built crashing input per target, documented in
  // docs/targets.md.
  Bytes oversized_quote = {'s', 'e', 'p', '=', ',', '\n', '"'};
  oversized_quote.insert(oversized_quote.end(), 33, 'x');
  oversized_quote.push_back('"');
  const std::vector<std::pair<std::string, Bytes>> crashers = {
      {"tlv-parser", {0xD7, 0x01, 0x03, 0x00}},
      {"csv-splitter", oversized_quote},
      {"checksum-header", {0xC5, 0x11, 0x7F, 0x00, 0x00}},
      {"state-machine", {'H', 'Q', 'R'}},
      {"expr-eval", {'1', '/', '0'}},
      {"magic-gate", {'F', 'U', 'Z', 'Z', 0x7F}},
  };
  for (const auto& [name, input] : crashers) {
    CAPTURE(name);
    const ExecutionTrace trace = execute(name, input);
    CHECK(trace.crashed);
    CHECK(trace.crash_site.has_value());
  }
}

TEST_CASE("execution counter tracks every run") {
  const std::uint64_t before = execution_count();
  execute("magic-gate", Bytes{'x'});
  execute("magic-gate", Bytes{'y'});
  CHECK(execution_count() == before + 2);
}

TEST_SUITE_END();
