#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "valunlearn/harness.hpp"

namespace valunlearn {

/// Per-round mean and sample standard deviation across repetitions.
/// Unchecked rounds (NaN residual) are left out of the residual statistics.
std::vector<AggregateRow> aggregate_rounds(const std::vector<RoundRecord>& rounds);

/// Median and mean wall time per phase.
std::vector<TimingRow> timing_summary(const std::string& method, const std::vector<RoundRecord>& rounds);

void write_rounds_csv(const std::vector<RoundRecord>& rounds, const std::filesystem::path& path);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path);
void write_timing_csv(const std::vector<TimingRow>& rows, const std::filesystem::path& path);
void write_manifest_json(const ExperimentReport& report, const std::filesystem::path& path);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

/// rounds.csv, aggregate.csv, timing.csv and manifest.json under `out_dir`.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

/// Reads a rounds.csv written by write_rounds_csv.
std::vector<RoundRecord> read_rounds_csv(const std::filesystem::path& path);

}  // namespace valunlearn
