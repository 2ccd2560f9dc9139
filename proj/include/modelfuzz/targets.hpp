#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modelfuzz/types.hpp"

namespace modelfuzz {

// Collects the edge trace while a target runs. Targets call block() once per
// basic block entered; after a crash the recorder goes inert so the trace
// ends at the crash site.
class Tracer {
 public:
  void block(BlockId id) {
    if (crashed_) return;
    edges_.push_back(make_edge(prev_, id));
    prev_ = id;
  }

  void crash(BlockId site) {
    if (crashed_) return;
    block(site);
    crashed_ = true;
    site_ = site;
  }

  bool crashed() const { return crashed_; }

  ExecutionTrace take() && {
    ExecutionTrace trace;
    trace.edges = std::move(edges_);
    trace.crashed = crashed_;
    if (crashed_) trace.crash_site = site_;
    return trace;
  }

 private:
  std::vector<EdgeId> edges_;
  BlockId prev_ = 0;
  BlockId site_ = 0;
  bool crashed_ = false;
};

using TargetFn = void (*)(std::span<const std::uint8_t>, Tracer&);

struct Target {
  TargetDescriptor descriptor;
  TargetFn run = nullptr;
  // Upper bound on trace length for any input; every target's control flow
  // is capped so no execution diverges.
  std::size_t trace_cap = 0;
};

// The full built-in suite, in a stable order.
const std::vector<Target>& target_suite();

std::vector<TargetDescriptor> list_targets();

// Throws std::invalid_argument("no such target") for unknown names.
const Target& find_target(const std::string& name);

// Runs one input through a target. Inputs longer than max_input_len are
// truncated. Pure: no state persists between calls.
ExecutionTrace execute(const Target& target, const Bytes& input);
ExecutionTrace execute(const std::string& target_name, const Bytes& input);

// Total executions performed by this process. Used by tests asserting that
// generation never executes anything.
std::uint64_t execution_count();

}  // namespace modelfuzz
