#include "modelfuzz/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"

using namespace modelfuzz;

namespace {

const std::vector<Strategy> kAll{Strategy::kFidgety, Strategy::kBatched,
                                 Strategy::kRandomBatched, Strategy::kMl};

EvalConfig small_eval() {
  EvalConfig config;
  config.targets = {"tlv-parser", "magic-gate"};
  config.seeds = {0, 1};
  config.base.budget = 600;
  config.base.warmup_execs = 100;
  config.base.num_generate = 16;
  config.base.alpha = 0.25;
  config.base.checkpoint_every = 100;
  return config;
}

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "modelfuzz_test" /
                   name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("rel_cov applies the ratio formula") {
  TargetPathSeries series;
  series.target = "t";
  series.paths = {{50, 75, 90}, {60, 80, 100}};
  const auto table =
      rel_cov({series}, {100, 200, 300},
              {Strategy::kFidgety, Strategy::kMl});
  CHECK(table.rel[0][0][1] == doctest::Approx(0.75));
  CHECK(table.rel[0][1][2] == doctest::Approx(1.0));
  CHECK(table.mean[0][1] == doctest::Approx(0.75));
  CHECK(table.se[0][1] == doctest::Approx(0.0));
}

TEST_CASE("rel_cov aggregates mean and standard error across targets") {
  TargetPathSeries a;
  a.target = "a";
  a.paths = {{60, 60}, {100, 100}};
  TargetPathSeries b;
  b.target = "b";
  b.paths = {{40, 40}, {50, 50}};
  const auto table = rel_cov({a, b}, {10, 20},
                             {Strategy::kFidgety, Strategy::kMl});
  // rel for fidgety: 0.6 and 0.8 -> mean 0.7, SE 0.1.
  CHECK(table.mean[0][1] == doctest::Approx(0.7));
  CHECK(table.se[0][1] == doctest::Approx(0.1));
}

TEST_CASE("rel_cov rejects targets with no paths at all") {
  TargetPathSeries empty;
  empty.target = "t";
  empty.paths = {{0, 0}, {0, 0}};
  CHECK_THROWS_WITH_AS(
      rel_cov({empty}, {10, 20}, {Strategy::kFidgety, Strategy::kMl}),
      "degenerate run", std::runtime_error);
}

TEST_CASE("a small experiment satisfies the rel-cov invariants") {
  const EvalResult result = run_experiment(small_eval());

  REQUIRE(result.grid.size() == 6);
  CHECK(result.grid.back() == 600);

  for (const RelCovTable& table : result.per_seed) {
    for (std::size_t ti = 0; ti < table.targets.size(); ++ti) {
      double best_final = 0.0;
      for (std::size_t s = 0; s < table.strategies.size(); ++s) {
        double prev = 0.0;
        for (const double v : table.rel[ti][s]) {
          CHECK(v > 0.0);
          CHECK(v <= 1.0);
          CHECK(v >= prev);
          prev = v;
        }
        best_final = std::max(best_final, table.rel[ti][s].back());
      }
      CHECK(best_final == 1.0);
    }
  }
}

TEST_CASE("a single strategy is always its own best") {
  EvalConfig config = small_eval();
  config.targets = {"expr-eval"};
  config.strategies = {Strategy::kFidgety};
  const EvalResult result = run_experiment(config);
  for (const RelCovTable& table : result.per_seed) {
    CHECK(table.rel[0][0].back() == 1.0);
  }
}

TEST_CASE("experiments are deterministic") {
  const EvalResult a = run_experiment(small_eval());
  const EvalResult b = run_experiment(small_eval());
  CHECK(summary_csv(a) == summary_csv(b));
  for (std::size_t ti = 0; ti < a.targets.size(); ++ti) {
    CHECK(per_target_csv(a, ti) == per_target_csv(b, ti));
  }
}

TEST_CASE("summary statistics can be recomputed from the raw csv") {
  const auto dir = temp_dir("eval_repro");
  const EvalConfig config = small_eval();
  const EvalResult result = run_experiment(config, dir.string());

  // Parse the per-target CSVs back in.
  // paths[target][strategy][seed][checkpoint]
  std::map<std::string, std::size_t> strategy_index{
      {"fidgety", 0}, {"batched", 1}, {"random", 2}, {"ml", 3}};
  std::vector<std::uint64_t> grid;
  std::vector<std::vector<std::vector<std::vector<std::uint64_t>>>> paths(
      config.targets.size(),
      std::vector<std::vector<std::vector<std::uint64_t>>>(
          kAll.size(), std::vector<std::vector<std::uint64_t>>(
                           config.seeds.size())));
  for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
    std::istringstream csv(
        slurp(dir / "per_target" / (config.targets[ti] + ".csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "strategy,seed,exec_index,paths,edge_buckets,crashes,rel_cov");
    while (std::getline(csv, line)) {
      std::istringstream row(line);
      std::string strategy, field;
      std::getline(row, strategy, ',');
      std::getline(row, field, ',');
      const std::uint64_t seed = std::stoull(field);
      std::getline(row, field, ',');
      const std::uint64_t exec_index = std::stoull(field);
      std::getline(row, field, ',');
      const std::uint64_t path_count = std::stoull(field);
      std::size_t seed_idx = 0;
      while (config.seeds[seed_idx] != seed) ++seed_idx;
      paths[ti][strategy_index.at(strategy)][seed_idx].push_back(path_count);
      if (ti == 0 && strategy == "fidgety" && seed_idx == 0) {
        grid.push_back(exec_index);
      }
    }
  }
  REQUIRE(grid == result.grid);

  // Recompute: per-seed rel-cov, seed average, cross-target mean and SE.
  const std::size_t t_count = grid.size();
  std::string rebuilt = "exec_index";
  for (Strategy s : kAll) {
    const std::string name = strategy_name(s);
    rebuilt += "," + name + "_mean," + name + "_se," + name + "_ci95";
  }
  rebuilt += "\n";
  for (std::size_t t = 0; t < t_count; ++t) {
    rebuilt += std::to_string(grid[t]);
    for (std::size_t s = 0; s < kAll.size(); ++s) {
      std::vector<double> per_target_avg;
      for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
        double sum = 0.0;
        for (std::size_t si = 0; si < config.seeds.size(); ++si) {
          std::uint64_t denom = 0;
          for (std::size_t s2 = 0; s2 < kAll.size(); ++s2) {
            denom = std::max(denom, paths[ti][s2][si].back());
          }
          sum += static_cast<double>(paths[ti][s][si][t]) /
                 static_cast<double>(denom);
        }
        per_target_avg.push_back(sum /
                                 static_cast<double>(config.seeds.size()));
      }
      const std::size_t n = per_target_avg.size();
      double sum = 0.0;
      for (const double v : per_target_avg) sum += v;
      const double mean = sum / static_cast<double>(n);
      double se = 0.0;
      if (n > 1) {
        double ss = 0.0;
        for (const double v : per_target_avg) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / static_cast<double>(n - 1)) /
             std::sqrt(static_cast<double>(n));
      }
      rebuilt += "," + format_float(mean) + "," + format_float(se) + "," +
                 format_float(1.96 * se);
    }
    rebuilt += "\n";
  }
  CHECK(rebuilt == slurp(dir / "summary.csv"));
}

TEST_CASE("output files are deterministic on disk") {
  const auto dir_a = temp_dir("eval_files_a");
  const auto dir_b = temp_dir("eval_files_b");
  run_experiment(small_eval(), dir_a.string());
  run_experiment(small_eval(), dir_b.string());

  for (const char* name : {"summary.csv", "manifest.json"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  for (const std::string& target : small_eval().targets) {
    CHECK(slurp(dir_a / "per_target" / (target + ".csv")) ==
          slurp(dir_b / "per_target" / (target + ".csv")));
  }

  const auto manifest = nlohmann::json::parse(slurp(dir_a / "manifest.json"));
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("targets").size() == 2);
}

TEST_CASE("failures leave a partial manifest behind") {
  const auto dir = temp_dir("eval_partial");
  EvalConfig config = small_eval();
  config.targets = {"tlv-parser", "no-such-target"};
  CHECK_THROWS_AS(run_experiment(config, dir.string()),
                  std::invalid_argument);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("status") == "partial");
  CHECK(manifest.at("error") == "no such target");
  // tlv-parser finished all of its runs before the bad target was reached.
  CHECK(manifest.at("completed_runs").size() == 8);
}

TEST_SUITE_END();
