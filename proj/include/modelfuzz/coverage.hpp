#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>

#include "modelfuzz/types.hpp"

namespace modelfuzz {

// Maps an edge hit count to one of 8 buckets, AFL-style:
// {1} {2} {3} {4-7} {8-15} {16-31} {32-127} {128+}.
// Throws std::invalid_argument("edge absent") for a zero count.
int bucketize(std::uint64_t hit_count);

// Fingerprints a trace's bucketized edge-count map, order-insensitively.
// The fingerprint is 64-bit FNV-1a over (edge, bucket) pairs sorted by edge,
// each edge as 8 little-endian bytes followed by the bucket byte. Fixed
// across platforms; collision probability is below 2^-32 for any desk-scale
// path population. See docs/formats.md.
PathId path_id(const ExecutionTrace& trace);

// Global coverage for one run: what "new path" means and what the
// evaluation counts.
struct CoverageState {
  std::unordered_set<PathId> seen_paths;
  // edge -> bitmask of buckets seen for that edge
  std::unordered_map<EdgeId, std::uint8_t> edge_buckets;
  std::uint64_t edge_bucket_count = 0;
  std::uint64_t crash_count = 0;
  std::unordered_map<PathId, std::uint64_t> path_first_seen;
};

struct ObserveResult {
  bool is_new_path = false;
  PathId path;
};

ObserveResult observe(CoverageState& state, const ExecutionTrace& trace,
                      std::uint64_t exec_index);

}  // namespace modelfuzz
