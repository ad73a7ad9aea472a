#include "memsizer/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "memsizer/stats.hpp"

namespace memsizer {

void SizingConfig::validate() const {
  if (lower_bound > upper_bound) throw std::invalid_argument("lower_bound exceeds upper_bound");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw std::invalid_argument("percentile must lie in (0, 100]");
  }
  if (witt_min_samples < 2) throw std::invalid_argument("witt_min_samples must be at least 2");
}

std::string_view to_string(PredictionPath path) {
  switch (path) {
    case PredictionPath::UserDefault: return "user_default";
    case PredictionPath::MaxPlusStatic: return "max_plus_static";
    case PredictionPath::RegressionPlusOffset: return "regression_plus_offset";
    case PredictionPath::PercentileValue: return "percentile";
    case PredictionPath::WittRegression: return "witt_regression";
    case PredictionPath::Oracle: return "oracle";
  }
  return "unknown";
}

std::string path_label(const Prediction& p) {
  std::string out(to_string(p.path));
  if (p.clamp == Clamp::ClampedLow) out += ":clamped_low";
  if (p.clamp == Clamp::ClampedHigh) out += ":clamped_high";
  return out;
}

const TaskHistory& PredictorState::history(const AbstractTaskId& id) const {
  static const TaskHistory empty;
  auto it = per_task.find(id);
  return it == per_task.end() ? empty : it->second;
}

void observe(PredictorState& state, const Observation& obs, const SizingConfig& cfg) {
  if (!obs.success && !cfg.train_on_failures) return;
  auto& h = state.per_task[obs.abstract];
  if (h.observations.empty()) {
    h.min_peak = h.max_peak = obs.peak_mem;
    h.min_input = h.max_input = obs.input_size;
  } else {
    h.min_peak = std::min(h.min_peak, obs.peak_mem);
    h.max_peak = std::max(h.max_peak, obs.peak_mem);
    h.min_input = std::min(h.min_input, obs.input_size);
    h.max_input = std::max(h.max_input, obs.input_size);
  }
  h.observations.push_back(obs);
}

namespace {

Prediction finalize_bytes(MemBytes bytes, PredictionPath path, const SizingConfig& cfg) {
  Prediction p{bytes, path, Clamp::None};
  if (p.value < cfg.lower_bound) {
    p.value = cfg.lower_bound;
    p.clamp = Clamp::ClampedLow;
  } else if (p.value > cfg.upper_bound) {
    p.value = cfg.upper_bound;
    p.clamp = Clamp::ClampedHigh;
  }
  return p;
}

}  // namespace

Prediction finalize(double bytes, PredictionPath path, const SizingConfig& cfg) {
  return finalize_bytes(ceil_bytes(bytes), path, cfg);
}

namespace {

MemBytes saturating_add(MemBytes a, MemBytes b) {
  if (a.value() > UINT64_MAX - b.value()) return MemBytes{UINT64_MAX};
  return a + b;
}

/// Observation inputs and peaks as reals, sorted by (input, peak) so that
/// floating-point sums do not depend on arrival order.
std::pair<std::vector<double>, std::vector<double>> training_pairs(const TaskHistory& h) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pts;
  pts.reserve(h.count());
  for (const auto& o : h.observations) pts.emplace_back(o.input_size.value(), o.peak_mem.value());
  std::sort(pts.begin(), pts.end());
  std::vector<double> x, y;
  x.reserve(pts.size());
  y.reserve(pts.size());
  for (auto [xi, yi] : pts) {
    x.push_back(static_cast<double>(xi));
    y.push_back(static_cast<double>(yi));
  }
  return {std::move(x), std::move(y)};
}

}  // namespace

PonderFit fit_ponder(const TaskHistory& h, const SizingConfig& cfg) {
  PonderFit fit;
  std::tie(fit.x, fit.y) = training_pairs(h);
  if (fit.x.size() < 2 || h.min_input == h.max_input) return fit;
  fit.correlation = stats::pearson(fit.x, fit.y);
  if (fit.correlation >= cfg.pearson_gate) {
    fit.model = stats::asymmetric_fit(fit.x, fit.y, {.lambda = cfg.lambda}).model;
  }
  return fit;
}

Prediction predict_ponder(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                          const SizingConfig& cfg) {
  if (h.count() < cfg.min_samples) return predict_ponder(h, PonderFit{}, x_n, y_user, cfg);
  return predict_ponder(h, fit_ponder(h, cfg), x_n, y_user, cfg);
}

Prediction predict_ponder(const TaskHistory& h, const PonderFit& fit, InputBytes x_n,
                          MemBytes y_user, const SizingConfig& cfg) {
  const std::size_t seen = h.count();
  const MemBytes max_plus_static = saturating_add(h.max_peak, cfg.static_offset);

  if (seen < cfg.min_samples) {
    if (seen > 0 && h.max_input > x_n) {
      return finalize_bytes(max_plus_static, PredictionPath::MaxPlusStatic, cfg);
    }
    return finalize_bytes(y_user, PredictionPath::UserDefault, cfg);
  }

  if (!fit.model) return finalize_bytes(max_plus_static, PredictionPath::MaxPlusStatic, cfg);

  const stats::LinearModel& model = *fit.model;
  const double xn = x_n.as_double();
  const double min_peak = h.min_peak.as_double();
  const double max_peak = h.max_peak.as_double();

  double estimate = model(xn);
  if (estimate < min_peak) {
    estimate = min_peak;
  } else if (estimate > max_peak && h.max_input > x_n) {
    estimate = max_peak;
  } else if (x_n > h.max_input && estimate < max_peak) {
    estimate = max_peak;
  }

  const MemBytes offset =
      std::max(stats::weighted_offset(fit.x, fit.y, model, xn, seen), cfg.static_offset);
  return finalize_bytes(saturating_add(ceil_bytes(estimate), offset),
                        PredictionPath::RegressionPlusOffset, cfg);
}

Prediction predict_witt_lr(const TaskHistory& h, InputBytes x_n, MemBytes y_user,
                           const SizingConfig& cfg) {
  if (h.count() < cfg.witt_min_samples || h.min_input == h.max_input) {
    return finalize_bytes(y_user, PredictionPath::UserDefault, cfg);
  }
  const auto [x, y] = training_pairs(h);
  const stats::LinearModel model = stats::ols_fit(x, y);
  const double value = model(x_n.as_double()) + stats::residual_stddev(x, y, model);
  return finalize(value, PredictionPath::WittRegression, cfg);
}

Prediction predict_percentile(const TaskHistory& h, InputBytes, MemBytes y_user,
                              const SizingConfig& cfg) {
  if (h.count() == 0) return finalize_bytes(y_user, PredictionPath::UserDefault, cfg);
  std::vector<MemBytes> peaks;
  peaks.reserve(h.count());
  for (const auto& o : h.observations) peaks.push_back(o.peak_mem);
  return finalize_bytes(stats::percentile(peaks, cfg.percentile),
                        PredictionPath::PercentileValue, cfg);
}

Prediction predict_user(const TaskHistory&, InputBytes, MemBytes y_user,
                        const SizingConfig& cfg) {
  return finalize_bytes(y_user, PredictionPath::UserDefault, cfg);
}

std::string_view to_string(SizerKind kind) {
  switch (kind) {
    case SizerKind::User: return "user";
    case SizerKind::WittLr: return "witt-lr";
    case SizerKind::Percentile: return "percentile";
    case SizerKind::Ponder: return "ponder";
    case SizerKind::Oracle: return "oracle";
  }
  return "unknown";
}

SizerKind parse_sizer(std::string_view name) {
  for (auto k : {SizerKind::User, SizerKind::WittLr, SizerKind::Percentile, SizerKind::Ponder,
                 SizerKind::Oracle}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown sizer '" + std::string(name) + "'");
}

MemorySizer::MemorySizer(SizerKind kind, SizingConfig cfg) : kind_(kind), cfg_(std::move(cfg)) {
  cfg_.validate();
}

Prediction MemorySizer::predict(const PhysicalTaskSpec& task) const {
  const TaskHistory& h = state_.history(task.abstract);
  switch (kind_) {
    case SizerKind::User: return predict_user(h, task.input_size, task.user_mem, cfg_);
    case SizerKind::WittLr: return predict_witt_lr(h, task.input_size, task.user_mem, cfg_);
    case SizerKind::Percentile:
      return predict_percentile(h, task.input_size, task.user_mem, cfg_);
    case SizerKind::Ponder: {
      auto it = ponder_fits_.find(task.abstract);
      static const PonderFit no_fit;
      return predict_ponder(h, it == ponder_fits_.end() ? no_fit : it->second, task.input_size,
                            task.user_mem, cfg_);
    }
    case SizerKind::Oracle: return {task.true_peak, PredictionPath::Oracle, Clamp::None};
  }
  throw std::logic_error("unhandled sizer kind");
}

void MemorySizer::observe(const Observation& obs) {
  memsizer::observe(state_, obs, cfg_);
  if (kind_ != SizerKind::Ponder) return;
  const TaskHistory& h = state_.history(obs.abstract);
  if (h.count() >= cfg_.min_samples) ponder_fits_[obs.abstract] = fit_ponder(h, cfg_);
}

}  // namespace memsizer
