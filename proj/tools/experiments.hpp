// Experiment pipelines behind the CLI subcommands.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace rbm::cli {

enum class Job { Generate, Amp, Se, Gd, Dmft, Gordon, Baselines, Sweep };

const char* job_name(Job j);
Job parse_job(const std::string& s);

using Metrics = std::vector<std::pair<std::string, double>>;

struct SeedResult {
  std::uint64_t seed = 0;
  Metrics metrics;
};

struct RunResult {
  std::vector<SeedResult> per_seed;
};

struct RunOptions {
  std::string out_dir;
  bool write_artifacts = true;
  bool quiet = false;
};

// Runs one job across all seeds. Artifacts go to out_dir when enabled.
RunResult run_job(Job job, const ExperimentConfig& config, const RunOptions& options);

// Long-format sweep: header "<axis>,seed,metric,value", one row per
// (value, seed, metric).
std::string run_sweep(const ExperimentConfig& config, const RunOptions& options);

// Median over seeds of every metric, in first-seen order.
Metrics median_metrics(const RunResult& r);

// Summary JSON with a fixed field order.
std::string summary_json(Job job, const ExperimentConfig& config, const RunResult& result, double wall_seconds,
                         const std::string& status, const std::string& error);

// Validates, runs, writes the summary (and a FAILED marker on error). Returns
// the process exit code: 0 ok, 2 validation, 3 numerical, 4 capacity, 1 other.
int execute(Job job, const ExperimentConfig& config, const RunOptions& options);

}  // namespace rbm::cli
