#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modelfuzz/coverage.hpp"
#include "modelfuzz/mutation.hpp"
#include "modelfuzz/path_model.hpp"
#include "modelfuzz/rng.hpp"
#include "modelfuzz/targets.hpp"
#include "modelfuzz/types.hpp"

namespace modelfuzz {

enum class Strategy { kFidgety = 0, kBatched = 1, kRandomBatched = 2, kMl = 3 };

enum class RetrainCadence { kPerBatch, kPerInput };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct StrategyConfig {
  Strategy strategy = Strategy::kFidgety;
  std::uint64_t budget = 20000;
  std::uint64_t warmup_execs = 2000;
  std::size_t num_generate = 256;  // K
  double alpha = 0.25;             // executed fraction per batch
  std::uint64_t checkpoint_every = 2000;
  std::uint64_t rng_seed = 0;
  RetrainCadence retrain_cadence = RetrainCadence::kPerBatch;
  int stack_exponent_max = 6;
  double splice_probability = 0.15;

  // ceil(alpha * num_generate), the per-iteration execution count.
  std::size_t executed_per_batch() const;
  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct ExecRecord {
  std::uint64_t exec_index = 0;  // 1-based
  PathId path;
  bool is_new_path = false;
  bool crashed = false;
  friend bool operator==(const ExecRecord&, const ExecRecord&) = default;
};

struct Checkpoint {
  std::uint64_t exec_index = 0;
  std::uint64_t paths = 0;
  std::uint64_t edge_buckets = 0;
  std::uint64_t crashes = 0;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct RunLog {
  std::string target;
  StrategyConfig config;
  std::vector<ExecRecord> records;
  std::vector<Checkpoint> checkpoints;
  std::vector<QueueEntry> final_queue;
  std::vector<Bytes> crash_inputs;
  std::uint64_t paths_found = 0;
  std::uint64_t edge_buckets_found = 0;
  std::uint64_t crash_count = 0;
};

// Everything the warm-up phase produced, snapshotted so all four strategies
// start from the same point for a given (target, seed).
struct WarmState {
  std::vector<QueueEntry> queue;
  CoverageState coverage;
  std::vector<std::pair<Bytes, PathId>> training_data;
  PathModel model;
  std::vector<ExecRecord> records;
  std::vector<Checkpoint> checkpoints;
  std::vector<Bytes> crash_inputs;
};

// Test seams. Production runs leave every hook empty.
struct RunHooks {
  // Replaces the model's entropy scores during ML candidate ranking.
  std::function<std::vector<double>(std::span<const Bytes>)> score_override;
  // Batch indices chosen for execution, before execution happens
  // (batched strategies only).
  std::function<void(std::uint64_t iteration,
                     std::span<const std::size_t> chosen)> on_selection;
  // Parent queue indices of a freshly generated batch, plus the queue size
  // the batch was generated from.
  std::function<void(std::uint64_t iteration, std::size_t queue_size,
                     std::span<const std::size_t> parents)> on_generated;
  // Every execution, in order, with the input that produced it.
  std::function<void(const ExecRecord&, const Bytes& input)> on_executed;
};

// Seed-corpus admission plus FIDGETY fuzzing until exactly
// config.warmup_execs executions have been recorded; the model is trained on
// everything executed. Seed corpus entries run first and count against the
// warm-up budget.
WarmState warmup(const Target& target, const StrategyConfig& config);

// Replays the warm-up prefix into a fresh RunLog, then runs the configured
// strategy until exactly config.budget executions are recorded.
RunLog run_strategy(const Target& target, const StrategyConfig& config,
                    const WarmState& warm, const RunHooks& hooks = {});

// Per-iteration entropy distribution of the generated batch, for the
// optional histogram dump.
struct EntropyHistogramRow {
  std::uint64_t iteration = 0;
  std::uint64_t exec_index = 0;
  std::size_t classes = 0;
  double max_entropy = 0.0;
  std::array<std::uint32_t, 12> bins{};
};

// Extra outputs an ML run can produce; empty for other strategies.
struct MlArtifacts {
  std::vector<EntropyHistogramRow> histogram;
  std::string model_json;
};

RunLog run_strategy_artifacts(const Target& target,
                              const StrategyConfig& config,
                              const WarmState& warm, MlArtifacts* artifacts);

}  // namespace modelfuzz
