#include "modelfuzz/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace modelfuzz {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_byte(std::uint64_t& h, std::uint8_t b) {
  h ^= b;
  h *= kFnvPrime;
}

}  // namespace

int bucketize(std::uint64_t hit_count) {
  if (hit_count == 0) throw std::invalid_argument("edge absent");
  if (hit_count == 1) return 0;
  if (hit_count == 2) return 1;
  if (hit_count == 3) return 2;
  if (hit_count < 8) return 3;
  if (hit_count < 16) return 4;
  if (hit_count < 32) return 5;
  if (hit_count < 128) return 6;
  return 7;
}

PathId path_id(const ExecutionTrace& trace) {
  std::vector<std::pair<EdgeId, std::uint64_t>> counts;
  counts.reserve(trace.edges.size());
  for (EdgeId e : trace.edges) counts.emplace_back(e, 0);
  std::sort(counts.begin(), counts.end());
  std::size_t unique = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (unique > 0 && counts[unique - 1].first == counts[i].first) {
      ++counts[unique - 1].second;
    } else {
      counts[unique] = {counts[i].first, 1};
      ++unique;
    }
  }
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < unique; ++i) {
    EdgeId edge = counts[i].first;
    for (int byte = 0; byte < 8; ++byte) {
      fnv_byte(h, static_cast<std::uint8_t>(edge >> (8 * byte)));
    }
    fnv_byte(h, static_cast<std::uint8_t>(bucketize(counts[i].second)));
  }
  return PathId{h};
}

ObserveResult observe(CoverageState& state, const ExecutionTrace& trace,
                      std::uint64_t exec_index) {
  const PathId path = path_id(trace);
  const bool is_new = state.seen_paths.insert(path).second;
  if (is_new) state.path_first_seen.emplace(path, exec_index);

  // Refresh the edge/bucket map from this trace's counts.
  std::vector<std::pair<EdgeId, std::uint64_t>> counts;
  counts.reserve(trace.edges.size());
  for (EdgeId e : trace.edges) counts.emplace_back(e, 0);
  std::sort(counts.begin(), counts.end());
  for (std::size_t i = 0; i < counts.size();) {
    std::size_t j = i;
    while (j < counts.size() && counts[j].first == counts[i].first) ++j;
    const std::uint8_t bit =
        static_cast<std::uint8_t>(1u << bucketize(j - i));
    std::uint8_t& mask = state.edge_buckets[counts[i].first];
    if (!(mask & bit)) {
      mask |= bit;
      ++state.edge_bucket_count;
    }
    i = j;
  }

  if (trace.crashed) ++state.crash_count;
  return ObserveResult{is_new, path};
}

std::string path_hex(PathId id) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llX",
                static_cast<unsigned long long>(id.label));
  return std::string(buf);
}

}  // namespace modelfuzz
