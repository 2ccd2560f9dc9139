#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "modelfuzz/eval.hpp"
#include "modelfuzz/fuzz_loop.hpp"
#include "modelfuzz/run_io.hpp"
#include "modelfuzz/targets.hpp"

namespace {

using namespace modelfuzz;

int cmd_targets() {
  nlohmann::json doc = nlohmann::json::array();
  for (const TargetDescriptor& d : list_targets()) {
    nlohmann::json entry;
    entry["name"] = d.name;
    entry["description"] = d.description;
    entry["max_input_len"] = d.max_input_len;
    nlohmann::json seeds = nlohmann::json::array();
    for (const Bytes& seed : d.seed_corpus) seeds.push_back(bytes_hex(seed));
    entry["seed_corpus"] = std::move(seeds);
    doc.push_back(std::move(entry));
  }
  std::printf("%s\n", doc.dump(2).c_str());
  return 0;
}

struct FuzzArgs {
  std::string target;
  std::string strategy = "fidgety";
  StrategyConfig config;
  std::string retrain = "batch";
  std::string out;
  std::string model_out;
  std::string entropy_csv;
};

int cmd_fuzz(const FuzzArgs& args) {
  StrategyConfig config = args.config;
  config.strategy = parse_strategy(args.strategy);
  config.retrain_cadence = args.retrain == "input" ? RetrainCadence::kPerInput
                                                   : RetrainCadence::kPerBatch;
  config.validate();

  const bool wants_artifacts =
      !args.model_out.empty() || !args.entropy_csv.empty();
  if (wants_artifacts && config.strategy != Strategy::kMl) {
    std::fprintf(stderr,
                 "--model-out and --entropy-csv require --strategy ml\n");
    return 1;
  }

  const Target& target = find_target(args.target);
  const WarmState warm = warmup(target, config);

  MlArtifacts artifacts;
  const RunLog log =
      wants_artifacts ? run_strategy_artifacts(target, config, warm, &artifacts)
                      : run_strategy(target, config, warm);

  save_run_artifacts(log, args.out);
  if (!args.model_out.empty()) {
    write_file_atomic(args.model_out, artifacts.model_json + "\n");
  }
  if (!args.entropy_csv.empty()) {
    write_file_atomic(args.entropy_csv,
                      entropy_histogram_csv(artifacts.histogram));
  }

  std::printf("%s %s: %llu executions, %llu paths, %llu edge buckets, "
              "%llu crashes, queue %zu\n",
              log.target.c_str(), strategy_name(config.strategy),
              static_cast<unsigned long long>(log.records.size()),
              static_cast<unsigned long long>(log.paths_found),
              static_cast<unsigned long long>(log.edge_buckets_found),
              static_cast<unsigned long long>(log.crash_count),
              log.final_queue.size());
  return 0;
}

struct EvalArgs {
  std::vector<std::string> targets;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  StrategyConfig config;
  std::string out;
};

int cmd_eval(const EvalArgs& args) {
  EvalConfig config;
  config.targets = args.targets;
  config.seeds = args.seeds;
  config.base = args.config;
  config.base.validate();

  const EvalResult result = run_experiment(config, args.out);

  const std::size_t last = result.grid.size() - 1;
  std::printf("final checkpoint (%llu executions), mean rel-cov over %zu "
              "targets x %zu seeds:\n",
              static_cast<unsigned long long>(result.grid[last]),
              result.targets.size(), result.seeds.size());
  for (std::size_t s = 0; s < result.strategies.size(); ++s) {
    std::printf("  %-8s %s +/- %s\n", strategy_name(result.strategies[s]),
                format_float(result.mean[s][last]).c_str(),
                format_float(result.se[s][last]).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-guided greybox fuzzing testbed"};
  app.require_subcommand(1);

  CLI::App* targets_cmd =
      app.add_subcommand("targets", "List built-in fuzz targets as JSON");

  FuzzArgs fuzz_args;
  CLI::App* fuzz_cmd =
      app.add_subcommand("fuzz", "Run one strategy on one target");
  fuzz_cmd->add_option("--target", fuzz_args.target, "Target name")
      ->required();
  fuzz_cmd->add_option("--strategy", fuzz_args.strategy,
                       "fidgety|batched|random|ml")
      ->check(CLI::IsMember({"fidgety", "batched", "random", "ml"}));
  fuzz_cmd->add_option("--budget", fuzz_args.config.budget,
                       "Total executions");
  fuzz_cmd->add_option("--warmup", fuzz_args.config.warmup_execs,
                       "Warm-up executions");
  fuzz_cmd->add_option("--k", fuzz_args.config.num_generate,
                       "Candidates generated per iteration");
  fuzz_cmd->add_option("--alpha", fuzz_args.config.alpha,
                       "Fraction of each batch executed");
  fuzz_cmd->add_option("--seed", fuzz_args.config.rng_seed, "Root RNG seed");
  fuzz_cmd->add_option("--checkpoint-every",
                       fuzz_args.config.checkpoint_every,
                       "Checkpoint cadence in executions");
  fuzz_cmd->add_option("--retrain", fuzz_args.retrain,
                       "Retrain cadence for ml: batch|input")
      ->check(CLI::IsMember({"batch", "input"}));
  fuzz_cmd->add_option("--out", fuzz_args.out, "Output directory")
      ->required();
  fuzz_cmd->add_option("--model-out", fuzz_args.model_out,
                       "Write the final model as JSON (ml only)");
  fuzz_cmd->add_option("--entropy-csv", fuzz_args.entropy_csv,
                       "Write per-iteration entropy histograms (ml only)");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Compare all four strategies across targets and seeds");
  eval_cmd
      ->add_option("--targets", eval_args.targets,
                   "Comma-separated target names (default: all)")
      ->delimiter(',');
  eval_cmd
      ->add_option("--seeds", eval_args.seeds,
                   "Comma-separated root seeds")
      ->delimiter(',');
  eval_cmd->add_option("--budget", eval_args.config.budget,
                       "Total executions per run");
  eval_cmd->add_option("--warmup", eval_args.config.warmup_execs,
                       "Warm-up executions");
  eval_cmd->add_option("--k", eval_args.config.num_generate,
                       "Candidates generated per iteration");
  eval_cmd->add_option("--alpha", eval_args.config.alpha,
                       "Fraction of each batch executed");
  eval_cmd->add_option("--checkpoint-every",
                       eval_args.config.checkpoint_every,
                       "Checkpoint cadence in executions");
  eval_cmd->add_option("--out", eval_args.out, "Output directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (targets_cmd->parsed()) return cmd_targets();
    if (fuzz_cmd->parsed()) return cmd_fuzz(fuzz_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
