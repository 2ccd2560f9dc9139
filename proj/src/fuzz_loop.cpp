#include "modelfuzz/fuzz_loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modelfuzz {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kFidgety: return "fidgety";
    case Strategy::kBatched: return "batched";
    case Strategy::kRandomBatched: return "random";
    case Strategy::kMl: return "ml";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "fidgety") return Strategy::kFidgety;
  if (name == "batched") return Strategy::kBatched;
  if (name == "random") return Strategy::kRandomBatched;
  if (name == "ml") return Strategy::kMl;
  throw std::invalid_argument("no such strategy: " + name);
}

std::size_t StrategyConfig::executed_per_batch() const {
  return static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(num_generate)));
}

void StrategyConfig::validate() const {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (warmup_execs < 1) {
    throw std::invalid_argument("warmup_execs must be >= 1");
  }
  if (warmup_execs >= budget) {
    throw std::invalid_argument("warmup_execs must be < budget");
  }
  if (num_generate < 1) throw std::invalid_argument("k must be >= 1");
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("alpha must be in (0, 1]");
  }
  if (executed_per_batch() < 1) {
    throw std::invalid_argument("ceil(alpha * k) must be >= 1");
  }
  if (checkpoint_every < 1) {
    throw std::invalid_argument("checkpoint_every must be >= 1");
  }
}

namespace {

struct LoopState {
  const Target& target;
  const StrategyConfig& config;
  const RunHooks& hooks;
  CoverageState coverage;
  std::vector<QueueEntry> queue;
  std::vector<ExecRecord> records;
  std::vector<Checkpoint> checkpoints;
  std::vector<Bytes> crash_inputs;

  std::uint64_t exec_index() const { return records.size(); }

  void checkpoint_if_due() {
    if (exec_index() % config.checkpoint_every == 0) take_checkpoint();
  }

  void take_checkpoint() {
    checkpoints.push_back({exec_index(), coverage.seen_paths.size(),
                           coverage.edge_bucket_count,
                           coverage.crash_count});
  }

  // Runs one input: records it, updates coverage, admits new paths.
  ExecRecord execute_one(const Bytes& input) {
    const ExecutionTrace trace = execute(target, input);
    const std::uint64_t index = exec_index() + 1;
    const auto [is_new, path] = observe(coverage, trace, index);
    const ExecRecord record{index, path, is_new, trace.crashed};
    records.push_back(record);
    if (hooks.on_executed) hooks.on_executed(record, input);
    if (trace.crashed) {
      crash_inputs.push_back(input);
    } else if (is_new) {
      queue.push_back(QueueEntry{input, path, index, 0});
    }
    checkpoint_if_due();
    return record;
  }
};

MutationConfig mutation_config(const Target& target,
                               const StrategyConfig& config) {
  MutationConfig mcfg;
  mcfg.max_len = target.descriptor.max_input_len;
  mcfg.stack_exponent_max = config.stack_exponent_max;
  mcfg.splice_probability = config.splice_probability;
  return mcfg;
}

void run_fidgety(LoopState& state, const MutationConfig& mcfg, Rng& rng,
                 std::uint64_t stop_at) {
  std::vector<std::size_t> parents;
  std::uint64_t iteration = 0;
  while (state.exec_index() < stop_at) {
    const std::size_t queue_size = state.queue.size();
    std::vector<Bytes> child =
        generate_batch_traced(state.queue, 1, mcfg, rng, &parents);
    if (state.hooks.on_generated) {
      state.hooks.on_generated(iteration, queue_size, parents);
    }
    state.execute_one(child[0]);
    ++iteration;
  }
}

std::vector<std::size_t> random_subset(std::size_t k, std::size_t m,
                                       Rng& rng) {
  std::vector<std::size_t> indices(k);
  for (std::size_t i = 0; i < k; ++i) indices[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    std::swap(indices[i], indices[i + rng.below(k - i)]);
  }
  indices.resize(m);
  return indices;
}

void histogram_row(std::vector<EntropyHistogramRow>* rows,
                   std::uint64_t iteration, std::uint64_t exec_index,
                   std::size_t classes, std::span<const double> scores) {
  if (rows == nullptr) return;
  EntropyHistogramRow row;
  row.iteration = iteration;
  row.exec_index = exec_index;
  row.classes = classes;
  row.max_entropy =
      std::max(std::log(static_cast<double>(std::max<std::size_t>(classes, 1))),
               1e-9);
  for (double s : scores) {
    const double unit = std::clamp(s / row.max_entropy, 0.0, 1.0);
    const std::size_t bin = std::min<std::size_t>(
        static_cast<std::size_t>(unit * row.bins.size()),
        row.bins.size() - 1);
    ++row.bins[bin];
  }
  rows->push_back(row);
}

void run_batched(LoopState& state, const MutationConfig& mcfg, Rng& rng,
                 PathModel& model, std::uint64_t stop_at,
                 std::vector<EntropyHistogramRow>* histogram) {
  const StrategyConfig& config = state.config;
  const std::size_t k = config.num_generate;
  std::vector<std::size_t> parents;
  std::uint64_t iteration = 0;

  while (state.exec_index() < stop_at) {
    const std::size_t queue_size = state.queue.size();
    const std::vector<Bytes> batch =
        generate_batch_traced(state.queue, k, mcfg, rng, &parents);
    if (state.hooks.on_generated) {
      state.hooks.on_generated(iteration, queue_size, parents);
    }

    const std::size_t m = static_cast<std::size_t>(
        std::min<std::uint64_t>(config.executed_per_batch(),
                                stop_at - state.exec_index()));

    std::vector<std::size_t> chosen;
    switch (config.strategy) {
      case Strategy::kBatched:
        chosen.resize(m);
        for (std::size_t i = 0; i < m; ++i) chosen[i] = i;
        break;
      case Strategy::kRandomBatched:
        chosen = random_subset(k, m, rng);
        break;
      case Strategy::kMl: {
        const std::vector<double> scores =
            state.hooks.score_override ? state.hooks.score_override(batch)
                                       : model.entropy_scores(batch);
        histogram_row(histogram, iteration, state.exec_index(),
                      model.class_count(), scores);
        Rng tie_rng(derive_stream(config.rng_seed,
                                  stream_tag::kTieBreakBase + iteration));
        const std::vector<std::size_t> order = rank_scores(scores, tie_rng);
        chosen.assign(order.begin(), order.begin() + m);
        break;
      }
      case Strategy::kFidgety:
        throw std::logic_error("fidgety is not a batched strategy");
    }
    if (state.hooks.on_selection) state.hooks.on_selection(iteration, chosen);

    std::vector<std::pair<Bytes, PathId>> executed_pairs;
    for (const std::size_t index : chosen) {
      const ExecRecord record = state.execute_one(batch[index]);
      if (config.strategy == Strategy::kMl) {
        if (config.retrain_cadence == RetrainCadence::kPerInput) {
          const std::pair<Bytes, PathId> pair{batch[index], record.path};
          model.retrain({&pair, 1});
        } else {
          executed_pairs.emplace_back(batch[index], record.path);
        }
      }
    }
    if (config.strategy == Strategy::kMl &&
        config.retrain_cadence == RetrainCadence::kPerBatch) {
      model.retrain(executed_pairs);
    }
    ++iteration;
  }
}

RunLog run_impl(const Target& target, const StrategyConfig& config,
                const WarmState& warm, const RunHooks& hooks,
                MlArtifacts* artifacts) {
  std::vector<EntropyHistogramRow>* histogram =
      artifacts == nullptr ? nullptr : &artifacts->histogram;
  config.validate();

  LoopState state{target, config, hooks};
  state.coverage = warm.coverage;
  state.queue = warm.queue;
  state.records = warm.records;
  state.checkpoints = warm.checkpoints;
  state.crash_inputs = warm.crash_inputs;

  PathModel model;
  if (config.strategy == Strategy::kMl) model = warm.model;

  const MutationConfig mcfg = mutation_config(target, config);
  Rng rng(derive_stream(
      config.rng_seed,
      stream_tag::kStrategyBase + static_cast<std::uint64_t>(config.strategy)));

  if (config.strategy == Strategy::kFidgety) {
    run_fidgety(state, mcfg, rng, config.budget);
  } else {
    run_batched(state, mcfg, rng, model, config.budget, histogram);
  }

  if (state.checkpoints.empty() ||
      state.checkpoints.back().exec_index != config.budget) {
    state.take_checkpoint();
  }

  if (artifacts != nullptr && config.strategy == Strategy::kMl) {
    artifacts->model_json = model.to_json();
  }

  RunLog log;
  log.target = target.descriptor.name;
  log.config = config;
  log.records = std::move(state.records);
  log.checkpoints = std::move(state.checkpoints);
  log.final_queue = std::move(state.queue);
  log.crash_inputs = std::move(state.crash_inputs);
  log.paths_found = state.coverage.seen_paths.size();
  log.edge_buckets_found = state.coverage.edge_bucket_count;
  log.crash_count = state.coverage.crash_count;
  return log;
}

}  // namespace

WarmState warmup(const Target& target, const StrategyConfig& config) {
  config.validate();

  const RunHooks no_hooks;
  LoopState state{target, config, no_hooks};
  Rng rng(derive_stream(config.rng_seed, stream_tag::kWarmup));
  const MutationConfig mcfg = mutation_config(target, config);

  WarmState warm;
  for (const Bytes& seed_input : target.descriptor.seed_corpus) {
    if (state.exec_index() >= config.warmup_execs) break;
    const ExecRecord record = state.execute_one(seed_input);
    warm.training_data.emplace_back(seed_input, record.path);
  }

  std::vector<std::size_t> parents;
  while (state.exec_index() < config.warmup_execs) {
    std::vector<Bytes> child =
        generate_batch_traced(state.queue, 1, mcfg, rng, &parents);
    const ExecRecord record = state.execute_one(child[0]);
    warm.training_data.emplace_back(std::move(child[0]), record.path);
  }

  warm.model.train(warm.training_data);
  warm.queue = std::move(state.queue);
  warm.coverage = std::move(state.coverage);
  warm.records = std::move(state.records);
  warm.checkpoints = std::move(state.checkpoints);
  warm.crash_inputs = std::move(state.crash_inputs);
  return warm;
}

RunLog run_strategy(const Target& target, const StrategyConfig& config,
                    const WarmState& warm, const RunHooks& hooks) {
  return run_impl(target, config, warm, hooks, nullptr);
}

RunLog run_strategy_artifacts(const Target& target,
                              const StrategyConfig& config,
                              const WarmState& warm, MlArtifacts* artifacts) {
  const RunHooks no_hooks;
  return run_impl(target, config, warm, no_hooks, artifacts);
}

}  // namespace modelfuzz
