#pragma once

// Experiment configuration and the command implementations behind the
// memsizer tool. Commands return their outputs so they can be tested
// without touching the filesystem; simulate writes its report files itself.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memsizer/metrics.hpp"
#include "memsizer/simulator.hpp"
#include "memsizer/traceio.hpp"

namespace memsizer::cli {

/// Parses "123", "128MB", "128MiB", "24GB", "24GiB", "1TiB". MB/GB are
/// binary units (2^20, 2^30). Throws ConfigError.
MemBytes parse_memory(std::string_view text);

/// Flat "section.key" -> value map read from an INI-style file:
///   # comment
///   [section]
///   key = value   ; trailing comment
/// A # or ; starts a comment at line start or after whitespace. Keys outside any section are stored as-is.
using Settings = std::map<std::string, std::string>;

Settings parse_settings(std::string_view text);

struct ExperimentConfig {
  std::optional<std::string> trace_path;
  traceio::SyntheticSpec synthetic;
  ClusterSpec cluster;
  SizerKind sizer = SizerKind::Ponder;
  SchedulerKind scheduler = SchedulerKind::Original;
  SimConfig sim;
  std::size_t repetitions = 1;
  std::filesystem::path out_dir = "out";
};

/// Builds a config from defaults plus settings. Unknown keys and bad values
/// throw ConfigError (also for unknown sizer or scheduler names).
ExperimentConfig build_config(const Settings& settings);

/// Trace file if one is configured, else the synthetic workload.
WorkflowDag load_workload(const ExperimentConfig& cfg);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct SimulateOutcome {
  std::vector<RunReport> reports;
  std::vector<metrics::MetricsSummary> summaries;
  std::size_t median_index = 0;
  bool any_aborted = false;
};

/// Runs cfg.repetitions runs with seeds seed, seed+1, ..., writes
/// run_<i>.json per run and summary.json naming the median-makespan run.
SimulateOutcome cmd_simulate(const ExperimentConfig& cfg, const WorkflowDag& dag);

/// Index of the median makespan (lower median; ties by repetition index).
std::size_t median_run(const std::vector<Millis>& makespans);

/// Online replay without a cluster: CSV with columns
/// instance_id,predicted_bytes,actual_bytes,path,would_fail.
std::string cmd_replay(const WorkflowDag& trace, SizerKind sizer, const SizingConfig& cfg);

/// File name -> CSV contents.
std::map<std::string, std::string> cmd_analyze(const WorkflowDag& trace,
                                               const WorkflowDag* second = nullptr);

std::string cmd_generate(const traceio::SyntheticSpec& spec);

}  // namespace memsizer::cli
