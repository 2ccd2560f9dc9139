#include "modelfuzz/run_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace modelfuzz {

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::string bytes_hex(const Bytes& data) {
  static const char* digits = "0123456789ABCDEF";
  std::string hex;
  hex.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0x0F]);
  }
  return hex;
}

std::string run_csv(const RunLog& log) {
  std::string csv = "exec_index,paths,edge_buckets,crashes\n";
  for (const Checkpoint& c : log.checkpoints) {
    char row[128];
    std::snprintf(row, sizeof(row), "%llu,%llu,%llu,%llu\n",
                  static_cast<unsigned long long>(c.exec_index),
                  static_cast<unsigned long long>(c.paths),
                  static_cast<unsigned long long>(c.edge_buckets),
                  static_cast<unsigned long long>(c.crashes));
    csv += row;
  }
  return csv;
}

std::string run_summary_json(const RunLog& log) {
  nlohmann::json doc;
  doc["target"] = log.target;
  doc["strategy"] = strategy_name(log.config.strategy);
  doc["budget"] = log.config.budget;
  doc["warmup_execs"] = log.config.warmup_execs;
  doc["k"] = log.config.num_generate;
  doc["alpha"] = log.config.alpha;
  doc["checkpoint_every"] = log.config.checkpoint_every;
  doc["seed"] = log.config.rng_seed;
  doc["retrain_cadence"] =
      log.config.retrain_cadence == RetrainCadence::kPerBatch ? "batch"
                                                              : "input";
  doc["executions"] = log.records.size();
  doc["paths"] = log.paths_found;
  doc["edge_buckets"] = log.edge_buckets_found;
  doc["crashes"] = log.crash_count;
  doc["queue_size"] = log.final_queue.size();
  nlohmann::json crash_list = nlohmann::json::array();
  for (const Bytes& input : log.crash_inputs) {
    crash_list.push_back(bytes_hex(input));
  }
  doc["crash_inputs"] = std::move(crash_list);
  return doc.dump(2) + "\n";
}

void save_queue(const std::vector<QueueEntry>& queue,
                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < queue.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "id:%06zu,path:%s", i,
                  path_hex(queue[i].path).c_str());
    std::string content(queue[i].input.begin(), queue[i].input.end());
    write_file_atomic(dir / name, content);
  }
}

std::vector<QueueEntry> load_queue(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<QueueEntry> queue;
  for (const auto& file : files) {
    const std::string name = file.filename().string();
    const std::size_t marker = name.find(",path:");
    if (name.rfind("id:", 0) != 0 || marker == std::string::npos) continue;
    QueueEntry entry;
    entry.path.label =
        std::stoull(name.substr(marker + 6), nullptr, 16);
    std::ifstream in(file, std::ios::binary);
    entry.input.assign(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
    queue.push_back(std::move(entry));
  }
  return queue;
}

std::string entropy_histogram_csv(
    const std::vector<EntropyHistogramRow>& rows) {
  std::string csv = "iteration,exec_index,classes,max_entropy";
  for (std::size_t b = 0; b < EntropyHistogramRow{}.bins.size(); ++b) {
    csv += ",bin" + std::to_string(b);
  }
  csv += "\n";
  for (const EntropyHistogramRow& row : rows) {
    char head[96];
    std::snprintf(head, sizeof(head), "%llu,%llu,%zu,%.6f",
                  static_cast<unsigned long long>(row.iteration),
                  static_cast<unsigned long long>(row.exec_index),
                  row.classes, row.max_entropy);
    csv += head;
    for (std::uint32_t count : row.bins) {
      csv += "," + std::to_string(count);
    }
    csv += "\n";
  }
  return csv;
}

void save_run_artifacts(const RunLog& log,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "run.csv", run_csv(log));
  write_file_atomic(out_dir / "summary.json", run_summary_json(log));
  save_queue(log.final_queue, out_dir / "queue");
}

}  // namespace modelfuzz
