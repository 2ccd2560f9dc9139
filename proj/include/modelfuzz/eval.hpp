#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modelfuzz/fuzz_loop.hpp"

namespace modelfuzz {

// Path counts for one target at one seed: paths[strategy][checkpoint].
struct TargetPathSeries {
  std::string target;
  std::vector<std::vector<std::uint64_t>> paths;
};

// Relative coverage for one seed's runs across a target set.
// rel-cov_t(s) = paths_t(s) / max over strategies of paths_T(s') per target.
struct RelCovTable {
  std::vector<std::uint64_t> grid;
  std::vector<Strategy> strategies;
  std::vector<std::string> targets;
  std::vector<std::vector<std::vector<double>>> rel;  // [target][strategy][t]
  std::vector<std::vector<double>> mean;              // [strategy][t]
  std::vector<std::vector<double>> se;                // [strategy][t]
};

// Throws std::runtime_error("degenerate run") when some target has no paths
// under any strategy.
RelCovTable rel_cov(const std::vector<TargetPathSeries>& per_target,
                    const std::vector<std::uint64_t>& grid,
                    const std::vector<Strategy>& strategies);

struct EvalConfig {
  std::vector<std::string> targets;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<Strategy> strategies{Strategy::kFidgety, Strategy::kBatched,
                                   Strategy::kRandomBatched, Strategy::kMl};
  StrategyConfig base;  // strategy and rng_seed are set per run
};

struct EvalResult {
  std::vector<std::uint64_t> grid;
  std::vector<Strategy> strategies;
  std::vector<std::string> targets;
  std::vector<std::uint64_t> seeds;
  // checkpoints[target][seed][strategy] for every run, on the shared grid
  std::vector<std::vector<std::vector<std::vector<Checkpoint>>>> checkpoints;
  std::vector<RelCovTable> per_seed;                    // one table per seed
  std::vector<std::vector<std::vector<double>>> seed_avg;  // [tgt][strat][t]
  std::vector<std::vector<double>> mean;                // [strategy][t]
  std::vector<std::vector<double>> se;                  // [strategy][t]
};

// Runs every (target, seed, strategy) combination from a shared per-seed
// warm-up and aggregates relative coverage: rel-cov per (target, seed),
// averaged over seeds, then mean and standard error across targets.
// When out_dir is nonempty, writes summary.csv, per_target/NAME.csv, and
// manifest.json there (atomically); on any run failure a partial manifest
// is written before the error propagates.
EvalResult run_experiment(const EvalConfig& config,
                          const std::string& out_dir = "");

// Aggregation helpers shared with tests and the CLI.
std::string format_float(double value);  // fixed, 6 decimals
std::string summary_csv(const EvalResult& result);
std::string per_target_csv(const EvalResult& result, std::size_t target_idx);

}  // namespace modelfuzz
