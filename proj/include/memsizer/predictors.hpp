#pragma once

// Online per-abstract-task memory sizing. Each sizer keeps one history per
// abstract task and is trained by feeding it finished attempts.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memsizer/core.hpp"
#include "memsizer/stats.hpp"

namespace memsizer {

struct SizingConfig {
  MemBytes lower_bound = MemBytes::mib(128);
  MemBytes upper_bound = MemBytes::gib(64);
  MemBytes static_offset = MemBytes::mib(128);
  double lambda = 1.0 / 50.0;
  double pearson_gate = 0.3;
  std::size_t min_samples = 5;
  std::size_t witt_min_samples = 2;
  double percentile = 95.0;
  bool train_on_failures = false;

  /// Throws std::invalid_argument if the bounds or lambda are out of range.
  void validate() const;
};

/// Which rule produced a prediction.
enum class PredictionPath {
  UserDefault,
  MaxPlusStatic,
  RegressionPlusOffset,
  PercentileValue,
  WittRegression,
  Oracle,
};

enum class Clamp { None, ClampedLow, ClampedHigh };

struct Prediction {
  MemBytes value;
  PredictionPath path = PredictionPath::UserDefault;
  Clamp clamp = Clamp::None;
};

std::string_view to_string(PredictionPath path);
/// Path label with a ":clamped_low"/":clamped_high" suffix when clamped.
std::string path_label(const Prediction& p);

/// Finished attempts of one abstract task plus running summaries.
struct TaskHistory {
  std::vector<Observation> observations;
  MemBytes min_peak;
  MemBytes max_peak;
  InputBytes min_input;
  InputBytes max_input;

  std::size_t count() const { return observations.size(); }
};

struct PredictorState {
  std::map<AbstractTaskId, TaskHistory> per_task;

  /// Empty history for tasks never observed.
  const TaskHistory& history(const AbstractTaskId& id) const;
};

/// Records obs if it succeeded (or cfg.train_on_failures is set).
void observe(PredictorState& state, const Observation& obs, const SizingConfig& cfg);

/// Rounds up, then clamps into [lower_bound, upper_bound], tagging the clamp.
Prediction finalize(double bytes, PredictionPath path, const SizingConfig& cfg);

/// The input-independent part of a Ponder prediction: sorted training data,
/// its correlation, and (when the correlation passes the gate) the
/// asymmetric-loss regression line. Only built once min_samples are seen.
struct PonderFit {
  std::vector<double> x;
  std::vector<double> y;
  double correlation = 0.0;
  std::optional<stats::LinearModel> model;
};

PonderFit fit_ponder(const TaskHistory& h, const SizingConfig& cfg);

Prediction predict_ponder(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                          const SizingConfig& cfg);
/// Same as above with a precomputed fit_ponder(h, cfg).
Prediction predict_ponder(const TaskHistory& h, const PonderFit& fit, InputBytes x_n,
                          MemBytes y_user, const SizingConfig& cfg);
Prediction predict_witt_lr(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                           const SizingConfig& cfg);
Prediction predict_percentile(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                              const SizingConfig& cfg);
Prediction predict_user(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                        const SizingConfig& cfg);

enum class SizerKind { User, WittLr, Percentile, Ponder, Oracle };

std::string_view to_string(SizerKind kind);
/// Accepts user, witt-lr, percentile, ponder, oracle; throws std::invalid_argument.
SizerKind parse_sizer(std::string_view name);

/// A sizing strategy together with the state it learns from.
class MemorySizer {
 public:
  MemorySizer(SizerKind kind, SizingConfig cfg);

  SizerKind kind() const { return kind_; }
  const SizingConfig& config() const { return cfg_; }
  const PredictorState& state() const { return state_; }

  /// The oracle sizer reads task.true_peak; every other kind sees only the
  /// abstract task, input size, and user default.
  Prediction predict(const PhysicalTaskSpec& task) const;
  void observe(const Observation& obs);

 private:
  SizerKind kind_;
  SizingConfig cfg_;
  PredictorState state_;
  std::map<AbstractTaskId, PonderFit> ponder_fits_;
};

}  // namespace memsizer
