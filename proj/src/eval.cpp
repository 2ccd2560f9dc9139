#include "modelfuzz/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "json.hpp"
#include "modelfuzz/run_io.hpp"

namespace modelfuzz {

RelCovTable rel_cov(const std::vector<TargetPathSeries>& per_target,
                    const std::vector<std::uint64_t>& grid,
                    const std::vector<Strategy>& strategies) {
  RelCovTable table;
  table.grid = grid;
  table.strategies = strategies;
  const std::size_t t_count = grid.size();

  for (const TargetPathSeries& series : per_target) {
    table.targets.push_back(series.target);
    std::uint64_t denom = 0;
    for (const auto& paths : series.paths) {
      denom = std::max(denom, paths.back());
    }
    if (denom == 0) throw std::runtime_error("degenerate run");

    std::vector<std::vector<double>> rel(strategies.size());
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      rel[s].resize(t_count);
      for (std::size_t t = 0; t < t_count; ++t) {
        rel[s][t] = static_cast<double>(series.paths[s][t]) /
                    static_cast<double>(denom);
      }
    }
    table.rel.push_back(std::move(rel));
  }

  const std::size_t n = per_target.size();
  table.mean.assign(strategies.size(), std::vector<double>(t_count, 0.0));
  table.se.assign(strategies.size(), std::vector<double>(t_count, 0.0));
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    for (std::size_t t = 0; t < t_count; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += table.rel[i][s][t];
      const double mean = sum / static_cast<double>(n);
      table.mean[s][t] = mean;
      if (n > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = table.rel[i][s][t] - mean;
          ss += d * d;
        }
        table.se[s][t] = std::sqrt(ss / static_cast<double>(n - 1)) /
                         std::sqrt(static_cast<double>(n));
      }
    }
  }
  return table;
}

std::string format_float(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

std::string summary_csv(const EvalResult& result) {
  std::string csv = "exec_index";
  for (Strategy s : result.strategies) {
    const std::string name = strategy_name(s);
    csv += "," + name + "_mean," + name + "_se," + name + "_ci95";
  }
  csv += "\n";
  for (std::size_t t = 0; t < result.grid.size(); ++t) {
    csv += std::to_string(result.grid[t]);
    for (std::size_t s = 0; s < result.strategies.size(); ++s) {
      const double se = result.se[s][t];
      csv += "," + format_float(result.mean[s][t]);
      csv += "," + format_float(se);
      csv += "," + format_float(1.96 * se);
    }
    csv += "\n";
  }
  return csv;
}

std::string per_target_csv(const EvalResult& result,
                           std::size_t target_idx) {
  std::string csv = "strategy,seed,exec_index,paths,edge_buckets,crashes,rel_cov\n";
  for (std::size_t s = 0; s < result.strategies.size(); ++s) {
    for (std::size_t seed_i = 0; seed_i < result.seeds.size(); ++seed_i) {
      const auto& points = result.checkpoints[target_idx][seed_i][s];
      for (std::size_t t = 0; t < points.size(); ++t) {
        char row[192];
        std::snprintf(
            row, sizeof(row), "%s,%llu,%llu,%llu,%llu,%llu,%s\n",
            strategy_name(result.strategies[s]),
            static_cast<unsigned long long>(result.seeds[seed_i]),
            static_cast<unsigned long long>(points[t].exec_index),
            static_cast<unsigned long long>(points[t].paths),
            static_cast<unsigned long long>(points[t].edge_buckets),
            static_cast<unsigned long long>(points[t].crashes),
            format_float(result.per_seed[seed_i].rel[target_idx][s][t])
                .c_str());
        csv += row;
      }
    }
  }
  return csv;
}

namespace {

nlohmann::json manifest_base(const EvalConfig& config,
                             const std::vector<std::string>& targets) {
  nlohmann::json doc;
  doc["targets"] = targets;
  doc["seeds"] = config.seeds;
  nlohmann::json names = nlohmann::json::array();
  for (Strategy s : config.strategies) names.push_back(strategy_name(s));
  doc["strategies"] = std::move(names);
  doc["budget"] = config.base.budget;
  doc["warmup_execs"] = config.base.warmup_execs;
  doc["k"] = config.base.num_generate;
  doc["alpha"] = config.base.alpha;
  doc["checkpoint_every"] = config.base.checkpoint_every;
  return doc;
}

void write_partial_manifest(const EvalConfig& config,
                            const std::vector<std::string>& targets,
                            const std::string& out_dir,
                            const std::vector<std::string>& completed,
                            const std::string& error) {
  nlohmann::json doc = manifest_base(config, targets);
  doc["status"] = "partial";
  doc["error"] = error;
  doc["completed_runs"] = completed;
  std::filesystem::create_directories(out_dir);
  write_file_atomic(std::filesystem::path(out_dir) / "manifest.json",
                    doc.dump(2) + "\n");
}

}  // namespace

EvalResult run_experiment(const EvalConfig& config,
                          const std::string& out_dir) {
  std::vector<std::string> target_names = config.targets;
  if (target_names.empty()) {
    for (const TargetDescriptor& d : list_targets()) {
      target_names.push_back(d.name);
    }
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("at least one seed required");
  }
  if (config.strategies.empty()) {
    throw std::invalid_argument("at least one strategy required");
  }

  EvalResult result;
  result.strategies = config.strategies;
  result.targets = target_names;
  result.seeds = config.seeds;
  result.checkpoints.resize(target_names.size());

  std::vector<std::string> completed;
  try {
    for (std::size_t ti = 0; ti < target_names.size(); ++ti) {
      const Target& target = find_target(target_names[ti]);
      result.checkpoints[ti].resize(config.seeds.size());
      for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        StrategyConfig run_config = config.base;
        run_config.rng_seed = config.seeds[si];
        const WarmState warm = warmup(target, run_config);
        for (Strategy strategy : config.strategies) {
          run_config.strategy = strategy;
          RunLog log = run_strategy(target, run_config, warm);

          std::vector<std::uint64_t> grid;
          for (const Checkpoint& c : log.checkpoints) {
            grid.push_back(c.exec_index);
          }
          if (result.grid.empty()) {
            result.grid = grid;
          } else if (grid != result.grid) {
            throw std::runtime_error("checkpoint grids differ across runs");
          }

          result.checkpoints[ti][si].push_back(std::move(log.checkpoints));
          completed.push_back(target_names[ti] + "/" +
                              std::to_string(config.seeds[si]) + "/" +
                              strategy_name(strategy));
        }
      }
    }

    // Relative coverage per seed, averaged over seeds, then aggregated
    // across targets.
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      std::vector<TargetPathSeries> per_target;
      for (std::size_t ti = 0; ti < target_names.size(); ++ti) {
        TargetPathSeries series;
        series.target = target_names[ti];
        for (std::size_t s = 0; s < config.strategies.size(); ++s) {
          std::vector<std::uint64_t> paths;
          for (const Checkpoint& c : result.checkpoints[ti][si][s]) {
            paths.push_back(c.paths);
          }
          series.paths.push_back(std::move(paths));
        }
        per_target.push_back(std::move(series));
      }
      result.per_seed.push_back(
          rel_cov(per_target, result.grid, config.strategies));
    }

    const std::size_t t_count = result.grid.size();
    const double seed_count = static_cast<double>(config.seeds.size());
    result.seed_avg.assign(
        target_names.size(),
        std::vector<std::vector<double>>(
            config.strategies.size(), std::vector<double>(t_count, 0.0)));
    for (std::size_t ti = 0; ti < target_names.size(); ++ti) {
      for (std::size_t s = 0; s < config.strategies.size(); ++s) {
        for (std::size_t t = 0; t < t_count; ++t) {
          double sum = 0.0;
          for (std::size_t si = 0; si < config.seeds.size(); ++si) {
            sum += result.per_seed[si].rel[ti][s][t];
          }
          result.seed_avg[ti][s][t] = sum / seed_count;
        }
      }
    }

    const std::size_t n = target_names.size();
    result.mean.assign(config.strategies.size(),
                       std::vector<double>(t_count, 0.0));
    result.se.assign(config.strategies.size(),
                     std::vector<double>(t_count, 0.0));
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      for (std::size_t t = 0; t < t_count; ++t) {
        double sum = 0.0;
        for (std::size_t ti = 0; ti < n; ++ti) {
          sum += result.seed_avg[ti][s][t];
        }
        const double mean = sum / static_cast<double>(n);
        result.mean[s][t] = mean;
        if (n > 1) {
          double ss = 0.0;
          for (std::size_t ti = 0; ti < n; ++ti) {
            const double d = result.seed_avg[ti][s][t] - mean;
            ss += d * d;
          }
          result.se[s][t] = std::sqrt(ss / static_cast<double>(n - 1)) /
                            std::sqrt(static_cast<double>(n));
        }
      }
    }
  } catch (const std::exception& e) {
    if (!out_dir.empty()) {
      write_partial_manifest(config, target_names, out_dir, completed,
                             e.what());
    }
    throw;
  }

  if (!out_dir.empty()) {
    const std::filesystem::path base(out_dir);
    std::filesystem::create_directories(base / "per_target");
    std::vector<std::string> files{"summary.csv", "manifest.json"};
    write_file_atomic(base / "summary.csv", summary_csv(result));
    for (std::size_t ti = 0; ti < target_names.size(); ++ti) {
      const std::string rel_name = "per_target/" + target_names[ti] + ".csv";
      write_file_atomic(base / rel_name, per_target_csv(result, ti));
      files.push_back(rel_name);
    }
    nlohmann::json doc = manifest_base(config, target_names);
    doc["status"] = "complete";
    doc["files"] = files;
    write_file_atomic(base / "manifest.json", doc.dump(2) + "\n");
  }
  return result;
}

}  // namespace modelfuzz
