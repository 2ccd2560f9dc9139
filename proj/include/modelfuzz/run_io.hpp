#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "modelfuzz/fuzz_loop.hpp"

namespace modelfuzz {

// Write-temp-then-rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

std::string bytes_hex(const Bytes& data);

// Checkpoint series as CSV: exec_index,paths,edge_buckets,crashes.
std::string run_csv(const RunLog& log);

// Config echo, final counts, and crash inputs as hex.
std::string run_summary_json(const RunLog& log);

// One raw-bytes file per entry, named id:NNNNNN,path:HEX.
void save_queue(const std::vector<QueueEntry>& queue,
                const std::filesystem::path& dir);
std::vector<QueueEntry> load_queue(const std::filesystem::path& dir);

std::string entropy_histogram_csv(
    const std::vector<EntropyHistogramRow>& rows);

// run.csv, summary.json, and queue/ under out_dir.
void save_run_artifacts(const RunLog& log,
                        const std::filesystem::path& out_dir);

}  // namespace modelfuzz
