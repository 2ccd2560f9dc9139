#include "modelfuzz/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modelfuzz {

namespace {

constexpr std::uint64_t kInteresting8[] = {0, 1, 127, 128, 255};
constexpr std::uint64_t kInteresting16[] = {0,   1,     127,   128,  255,
                                            256, 32767, 32768, 65535};
constexpr std::uint64_t kInteresting32[] = {
    0,     1,     127,        128,        255, 256,
    32767, 32768, 65535,      2147483647, 4294967295ULL};

constexpr std::uint64_t kArithMax = 35;
constexpr std::size_t kInsertMax = 16;

std::uint64_t read_le(const Bytes& data, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
  }
  return v;
}

void write_le(Bytes& data, std::size_t pos, int width, std::uint64_t v) {
  for (int i = 0; i < width; ++i) {
    data[pos + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

bool applicable(int op, std::size_t len, std::size_t max_len) {
  using namespace havoc;
  switch (op) {
    case kBitFlip:
    case kByteOverwrite:
    case kInterest8:
    case kArith8:
    case kOverwriteRepeat:
      return len >= 1;
    case kInterest16:
    case kArith16:
      return len >= 2;
    case kInterest32:
    case kArith32:
      return len >= 4;
    case kDeleteBlock:
      return len >= 2;
    case kDupInsertBlock:
      return len >= 1 && len < max_len;
    case kInsertRandom:
      return len < max_len;
    default:
      return false;
  }
}

void apply_op(int op, Bytes& data, const MutationConfig& config, Rng& rng) {
  using namespace havoc;
  const std::size_t len = data.size();
  switch (op) {
    case kBitFlip: {
      const std::size_t pos = rng.below(len);
      data[pos] ^= static_cast<std::uint8_t>(1u << rng.below(8));
      break;
    }
    case kByteOverwrite: {
      data[rng.below(len)] = rng.next_byte();
      break;
    }
    case kInterest8: {
      const std::size_t pos = rng.below(len);
      write_le(data, pos, 1, kInteresting8[rng.below(std::size(kInteresting8))]);
      break;
    }
    case kInterest16: {
      const std::size_t pos = rng.below(len - 1);
      write_le(data, pos, 2,
               kInteresting16[rng.below(std::size(kInteresting16))]);
      break;
    }
    case kInterest32: {
      const std::size_t pos = rng.below(len - 3);
      write_le(data, pos, 4,
               kInteresting32[rng.below(std::size(kInteresting32))]);
      break;
    }
    case kArith8:
    case kArith16:
    case kArith32: {
      const int width = op == kArith8 ? 1 : op == kArith16 ? 2 : 4;
      const std::size_t pos = rng.below(len - (width - 1));
      const std::uint64_t delta = 1 + rng.below(kArithMax);
      std::uint64_t v = read_le(data, pos, width);
      v = rng.below(2) ? v + delta : v - delta;
      write_le(data, pos, width, v);
      break;
    }
    case kDeleteBlock: {
      const std::size_t del_len = 1 + rng.below(len - 1);
      const std::size_t offset = rng.below(len - del_len + 1);
      havoc::delete_block(data, offset, del_len);
      break;
    }
    case kDupInsertBlock: {
      std::size_t block_len = 1 + rng.below(len);
      block_len = std::min(block_len, config.max_len - len);
      const std::size_t src = rng.below(len - block_len + 1);
      const std::size_t at = rng.below(len + 1);
      havoc::dup_insert_block(data, src, block_len, at, config.max_len);
      break;
    }
    case kOverwriteRepeat: {
      const std::size_t offset = rng.below(len);
      const std::size_t block_len = 1 + rng.below(len - offset);
      const std::uint8_t fill = rng.next_byte();
      std::fill_n(data.begin() + offset, block_len, fill);
      break;
    }
    case kInsertRandom: {
      std::size_t count =
          1 + rng.below(std::min(kInsertMax, config.max_len - len));
      const std::size_t at = rng.below(len + 1);
      Bytes fresh(count);
      for (auto& b : fresh) b = rng.next_byte();
      data.insert(data.begin() + at, fresh.begin(), fresh.end());
      break;
    }
    default:
      break;
  }
}

}  // namespace

namespace havoc {

void delete_block(Bytes& data, std::size_t offset, std::size_t len) {
  data.erase(data.begin() + offset, data.begin() + offset + len);
}

void dup_insert_block(Bytes& data, std::size_t src_offset, std::size_t len,
                      std::size_t insert_at, std::size_t max_len) {
  Bytes block(data.begin() + src_offset, data.begin() + src_offset + len);
  data.insert(data.begin() + insert_at, block.begin(), block.end());
  if (data.size() > max_len) data.resize(max_len);
}

}  // namespace havoc

QueueEntry& select_parent(std::vector<QueueEntry>& queue, Rng& rng) {
  if (queue.empty()) throw std::invalid_argument("queue empty");
  const std::size_t n = queue.size();
  // Total weight of the geometric series 1 + g + g^2 + ... (newest first).
  const double total =
      (1.0 - std::pow(kRecencyGamma, static_cast<double>(n))) /
      (1.0 - kRecencyGamma);
  double u = rng.unit_real() * total;
  double w = 1.0;
  for (std::size_t back = 0; back < n; ++back) {
    if (u < w || back == n - 1) {
      QueueEntry& entry = queue[n - 1 - back];
      ++entry.times_selected;
      return entry;
    }
    u -= w;
    w *= kRecencyGamma;
  }
  QueueEntry& entry = queue.back();  // unreachable
  ++entry.times_selected;
  return entry;
}

Bytes mutate(const Bytes& parent, const MutationConfig& config, Rng& rng,
             std::vector<int>* fired) {
  if (config.max_len < 16) {
    throw std::invalid_argument("max_len must be >= 16");
  }
  if (config.stack_exponent_max < 1) {
    throw std::invalid_argument("stack_exponent_max must be >= 1");
  }
  Bytes child = parent;
  if (child.size() > config.max_len) child.resize(config.max_len);
  const std::uint64_t u = rng.below(config.stack_exponent_max + 1);
  const std::uint64_t stack = 1ULL << (1 + u);
  for (std::uint64_t step = 0; step < stack; ++step) {
    int op;
    do {
      op = static_cast<int>(rng.below(havoc::kOpClassCount));
    } while (!applicable(op, child.size(), config.max_len));
    apply_op(op, child, config, rng);
    if (fired) fired->push_back(op);
  }
  if (child.size() > config.max_len) child.resize(config.max_len);
  return child;
}

Bytes splice(const Bytes& a, const Bytes& b, std::size_t max_len, Rng& rng) {
  const std::size_t cut_a = rng.below(a.size() + 1);
  const std::size_t cut_b = rng.below(b.size() + 1);
  Bytes out(a.begin(), a.begin() + cut_a);
  out.insert(out.end(), b.begin() + cut_b, b.end());
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

std::vector<Bytes> generate_batch(std::vector<QueueEntry>& queue,
                                  std::size_t k, const MutationConfig& config,
                                  Rng& rng) {
  return generate_batch_traced(queue, k, config, rng, nullptr);
}

std::vector<Bytes> generate_batch_traced(std::vector<QueueEntry>& queue,
                                         std::size_t k,
                                         const MutationConfig& config,
                                         Rng& rng,
                                         std::vector<std::size_t>* parents) {
  std::vector<Bytes> batch;
  batch.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    QueueEntry& parent = select_parent(queue, rng);
    if (parents) {
      parents->push_back(static_cast<std::size_t>(&parent - queue.data()));
    }
    Bytes base = parent.input;
    if (queue.size() >= 2 && rng.chance(config.splice_probability)) {
      const std::size_t self = static_cast<std::size_t>(&parent - queue.data());
      std::size_t other = rng.below(queue.size() - 1);
      if (other >= self) ++other;
      base = splice(base, queue[other].input, config.max_len, rng);
    }
    batch.push_back(mutate(base, config, rng));
  }
  return batch;
}

}  // namespace modelfuzz
