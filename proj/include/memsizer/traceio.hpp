#pragma once

// Trace CSV, synthetic workloads, and JSON run reports.
//
// Trace header (exact):
//   workflow,task,instance_id,input_bytes,peak_mem_bytes,runtime_ms,cpus,user_mem_bytes,depends_on
// depends_on holds semicolon-separated instance ids and may be empty. Fields
// containing a comma, quote, or line break are double-quoted with quotes
// doubled, as in RFC 4180.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memsizer/core.hpp"
#include "memsizer/metrics.hpp"
#include "memsizer/simulator.hpp"

namespace memsizer::traceio {

inline constexpr std::string_view kTraceHeader =
    "workflow,task,instance_id,input_bytes,peak_mem_bytes,runtime_ms,cpus,user_mem_bytes,"
    "depends_on";

class TraceError : public std::runtime_error {
 public:
  enum class Kind {
    MalformedHeader,
    BadRow,
    BadInteger,
    InvalidValue,
    DuplicateId,
    DanglingDependency,
    Cycle,
  };

  TraceError(Kind kind, std::size_t line, std::size_t column, const std::string& detail);

  Kind kind() const { return kind_; }
  /// 1-based; the header is line 1.
  std::size_t line() const { return line_; }
  /// 1-based field index, 0 when the error is not tied to a field.
  std::size_t column() const { return column_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
};

WorkflowDag parse_trace(std::string_view text);

/// Rows in instance-id order; always ends with a newline.
std::string write_trace(const WorkflowDag& dag);

enum class Pattern { Linear, NoisyWeak, Bimodal, Uncorrelated };

std::string_view to_string(Pattern p);
Pattern parse_pattern(std::string_view s);

enum class InputSpacing { Random, Even };

struct SyntheticSpec {
  Pattern pattern = Pattern::Linear;
  std::size_t n = 100;
  std::string workflow = "synthetic";
  std::string task = "task";

  InputSpacing spacing = InputSpacing::Random;
  InputBytes input_min = InputBytes::gib(1);
  InputBytes input_max = InputBytes::gib(10);

  /// Peak bytes per input byte and base peak of the linear band.
  double slope = 0.5;
  double intercept = static_cast<double>(kGiB);
  /// Half-width of the uniform noise added to peaks, in bytes. Noisy-weak
  /// raises it to at least 2 * |slope| * (input_max - input_min) and shifts
  /// the band up by the same amount.
  double noise_sigma = 0.0;

  /// Bimodal: share of tasks on the input-independent low band.
  double cluster_fraction = 0.3;
  double low_peak = 512.0 * static_cast<double>(kMiB);

  /// Uncorrelated: peaks uniform in [peak_min, peak_max].
  double peak_min = static_cast<double>(kGiB);
  double peak_max = 8.0 * static_cast<double>(kGiB);

  /// Runtime = base + per_gib * input GiB, then a uniform +-jitter factor.
  double runtime_base_ms = 60'000.0;
  double runtime_per_gib_ms = 30'000.0;
  double runtime_jitter = 0.2;
  std::vector<std::uint32_t> core_choices{1, 2, 4};

  std::uint64_t seed = 1;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PropertyUnsatisfiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Independent tasks of one abstract task, ids "<task>_00000", ... . The user
/// default is 1.5x the largest generated peak rounded up to 256 MiB.
WorkflowDag generate_synthetic(const SyntheticSpec& spec);

/// Deterministic JSON: config, metrics, attempts, path_counts, in that order.
std::string write_report(const RunReport& report, const metrics::MetricsSummary& summary);

}  // namespace memsizer::traceio
