#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace modelfuzz {

using Bytes = std::vector<std::uint8_t>;
using BlockId = std::uint32_t;

// A control-flow edge between two basic blocks, packed into one integer:
// (from << 32) | to. Block 0 is the virtual entry predecessor.
using EdgeId = std::uint64_t;

inline EdgeId make_edge(BlockId from, BlockId to) {
  return (static_cast<EdgeId>(from) << 32) | to;
}

// Stable fingerprint of one equivalence class of execution behavior.
struct PathId {
  std::uint64_t label = 0;
  friend auto operator<=>(const PathId&, const PathId&) = default;
};

struct ExecutionTrace {
  std::vector<EdgeId> edges;
  bool crashed = false;
  std::optional<BlockId> crash_site;
};

struct TargetDescriptor {
  std::string name;
  std::string description;
  std::size_t max_input_len = 0;
  std::vector<Bytes> seed_corpus;
};

std::string path_hex(PathId id);

}  // namespace modelfuzz

template <>
struct std::hash<modelfuzz::PathId> {
  std::size_t operator()(const modelfuzz::PathId& p) const noexcept {
    return std::hash<std::uint64_t>{}(p.label);
  }
};
