#pragma once

#include <cstdint>
#include <vector>

#include "modelfuzz/rng.hpp"
#include "modelfuzz/types.hpp"

namespace modelfuzz {

struct QueueEntry {
  Bytes input;
  PathId path;
  std::uint64_t added_at = 0;  // execution index of admission
  std::uint64_t times_selected = 0;
};

struct MutationConfig {
  std::size_t max_len = 64;
  int stack_exponent_max = 6;
  double splice_probability = 0.15;
  std::uint64_t rng_seed = 0;
};

// Recency weight for parent scheduling: entry at admission rank i of n gets
// gamma^(n-1-i), newest first.
inline constexpr double kRecencyGamma = 0.95;

// Samples a parent, recency-weighted, and increments its times_selected.
// Throws std::invalid_argument("queue empty") on an empty queue.
QueueEntry& select_parent(std::vector<QueueEntry>& queue, Rng& rng);

namespace havoc {

// The stacked operator classes mutate() draws from, uniformly. Operators
// inapplicable to the current length are redrawn.
enum OpClass {
  kBitFlip = 0,
  kByteOverwrite,
  kInterest8,
  kInterest16,
  kInterest32,
  kArith8,
  kArith16,
  kArith32,
  kDeleteBlock,
  kDupInsertBlock,
  kOverwriteRepeat,
  kInsertRandom,
  kOpClassCount,
};

// Deterministic primitives behind the operator classes; exposed for tests.
void delete_block(Bytes& data, std::size_t offset, std::size_t len);
void dup_insert_block(Bytes& data, std::size_t src_offset, std::size_t len,
                      std::size_t insert_at, std::size_t max_len);

}  // namespace havoc

// Applies a stack of s = 2^(1+u) havoc operators, u uniform in
// [0, stack_exponent_max]. The result never exceeds config.max_len and may
// equal the parent. fired, when non-null, collects the operator classes
// applied.
Bytes mutate(const Bytes& parent, const MutationConfig& config, Rng& rng,
             std::vector<int>* fired = nullptr);

// Prefix of a + suffix of b at random split points, truncated to max_len.
Bytes splice(const Bytes& a, const Bytes& b, std::size_t max_len, Rng& rng);

// K children from recency-sampled (and occasionally spliced) parents.
// Executes nothing; only times_selected changes on the queue.
std::vector<Bytes> generate_batch(std::vector<QueueEntry>& queue,
                                  std::size_t k, const MutationConfig& config,
                                  Rng& rng);

// Same, also reporting each child's parent queue index (for loop invariants
// and tests).
std::vector<Bytes> generate_batch_traced(std::vector<QueueEntry>& queue,
                                         std::size_t k,
                                         const MutationConfig& config,
                                         Rng& rng,
                                         std::vector<std::size_t>* parents);

}  // namespace modelfuzz
