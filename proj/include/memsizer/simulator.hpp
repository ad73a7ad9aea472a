#pragma once

// Deterministic discrete-event replay of a workflow on a simulated cluster.
//
// Tasks are sized when they are placed, not when they become ready. An
// attempt whose allocation is below the task's effective peak is killed
// part-way through its runtime and re-queued on the next rung of the retry
// ladder. Successful and failed attempts alike are fed back to the sizer.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memsizer/core.hpp"
#include "memsizer/predictors.hpp"
#include "memsizer/random.hpp"
#include "memsizer/schedulers.hpp"

namespace memsizer {

enum class FailureMode { ConstantFraction, UniformFraction };

struct FailureModel {
  FailureMode mode = FailureMode::ConstantFraction;
  double fraction = 0.5;
};

enum class NoiseMode { None, AdditiveUniform };

/// Per-attempt perturbation of a task's true peak.
struct NoiseModel {
  NoiseMode mode = NoiseMode::None;
  MemBytes half_width;
};

enum class RetryRung { PredictorValue, UserValue, UpperBound };

struct RetryPolicy {
  std::vector<RetryRung> ladder{RetryRung::PredictorValue, RetryRung::UserValue,
                                RetryRung::UpperBound};
};

std::string_view to_string(FailureMode m);
std::string_view to_string(NoiseMode m);
std::string_view to_string(RetryRung r);
FailureMode parse_failure_mode(std::string_view s);
NoiseMode parse_noise_mode(std::string_view s);
RetryRung parse_retry_rung(std::string_view s);

struct SimConfig {
  SizingConfig sizing;
  FailureModel failure;
  NoiseModel noise;
  RetryPolicy retry;
  std::uint64_t seed = 0;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleTask : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError for an empty ladder, a ladder not ending in UpperBound,
/// a failure fraction outside (0, 1], or invalid sizing bounds.
void validate(const SimConfig& cfg);

enum class Outcome { Success, MemoryFailure };

struct AttemptRecord {
  std::string instance_id;
  std::string abstract;
  std::uint32_t attempt_no = 1;
  std::string node_id;
  MemBytes allocated_mem;
  std::uint32_t cores = 1;
  Millis start{0};
  Millis end{0};
  Outcome outcome = Outcome::Success;
  /// Effective peak on success; the allocation on a memory failure.
  MemBytes observed_peak;
  std::string predictor_path;

  Millis duration() const { return end - start; }
  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

struct RunReport {
  std::vector<AttemptRecord> attempts;
  Millis makespan{0};
  /// Busy core-milliseconds per node id.
  std::map<std::string, std::uint64_t> node_busy_core_ms;
  bool aborted = false;

  // Configuration echo.
  SchedulerKind scheduler = SchedulerKind::Original;
  SizerKind sizer = SizerKind::User;
  SimConfig config;
  ClusterSpec cluster;
};

/// Failure time for u drawn from (0, 1]. ConstantFraction ignores u. The
/// result is ceil(fraction * runtime) clamped into [1 ms, runtime].
Millis time_to_failure(const FailureModel& model, Millis runtime, double u);
/// Draws u from the stream only for UniformFraction.
Millis time_to_failure(const FailureModel& model, Millis runtime, RandomStream& stream);

/// Stream salts; each concern draws from RandomStream(seed ^ salt).
inline constexpr std::uint64_t kFailureStreamSalt = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kNoiseStreamSalt = 0xC2B2AE3D27D4EB4FULL;

RunReport run(const WorkflowDag& dag, const ClusterSpec& cluster, SchedulerKind scheduler,
              SizerKind sizer, const SimConfig& cfg);

}  // namespace memsizer
