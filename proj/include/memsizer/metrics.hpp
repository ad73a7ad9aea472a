#pragma once

// Allocation-quality measures over a run ledger or a raw trace.
//
// Memory-time quantities are in byte-milliseconds and use the rectangular
// approximation: a successful attempt "uses" peak * duration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsizer/core.hpp"
#include "memsizer/simulator.hpp"
#include "memsizer/stats.hpp"

namespace memsizer::metrics {

struct Wastage {
  double used = 0.0;
  double over = 0.0;
  double under = 0.0;
};

struct MaqResult {
  double value = 1.0;
  /// Set when there was nothing to measure (no attempts); value is then 1.
  bool empty = false;
};

struct MetricsSummary {
  double maq = 1.0;
  bool maq_empty = false;
  double used_mem_time = 0.0;
  double over_wastage = 0.0;
  double under_wastage = 0.0;
  Millis makespan{0};
  std::size_t failed_attempts = 0;
  double cpu_utilization = 0.0;
  double allocated_mem_time = 0.0;
  double allocated_cpu_time = 0.0;
};

Wastage compute_wastage(const std::vector<AttemptRecord>& attempts);
Wastage compute_wastage(const RunReport& report);

MaqResult compute_maq(const Wastage& w);
MaqResult compute_maq(const RunReport& report);

/// Busy core-time over total core-time of the cluster during the makespan.
double cpu_utilization(const RunReport& report, const ClusterSpec& cluster);

MetricsSummary summarize(const RunReport& report);

struct CdfPoint {
  double gib_per_core = 0.0;
  double cumulative_fraction = 0.0;
};

enum class MemKind { Requested, Used };

/// Step points of the empirical CDF of memory per core: one point per
/// distinct ratio, with the fraction of items at or below it.
std::vector<CdfPoint> mem_per_core_distribution(const WorkflowDag& trace, MemKind kind);
/// Requested uses the allocation; Used uses the observed peak of successful
/// attempts only.
std::vector<CdfPoint> mem_per_core_distribution(const RunReport& report, MemKind kind);

struct PeakDiff {
  std::string abstract;
  std::size_t index = 0;  // ordinal among the abstract task's instances by id
  std::string instance_a;
  std::string instance_b;
  MemBytes diff;
};

struct PeakDiffReport {
  std::vector<PeakDiff> matched;
  std::vector<std::string> unmatched_a;
  std::vector<std::string> unmatched_b;
  /// CDF over the absolute differences, in bytes.
  std::vector<std::pair<MemBytes, double>> cdf;
};

class NoOverlap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Matches instances by (abstract task, ordinal) and reports |peak_a - peak_b|.
PeakDiffReport peak_diff_between_runs(const WorkflowDag& a, const WorkflowDag& b);

struct PatternReport {
  std::string abstract;
  std::size_t instances = 0;
  double pearson = 0.0;
  /// Absent when all inputs are equal.
  std::optional<stats::LinearModel> ols;
  double witt_offset = 0.0;  // residual stddev added to the OLS line
  MemBytes p95;
  std::size_t under_ols = 0;
  std::size_t under_witt = 0;
  std::size_t under_p95 = 0;
};

/// Offline fits over every instance of one abstract task; throws
/// stats::StatsError(TooFewSamples) below two instances.
PatternReport pattern_report(const WorkflowDag& trace, const AbstractTaskId& abstract);

}  // namespace memsizer::metrics
