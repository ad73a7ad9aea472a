#pragma once

// Numerical primitives behind the memory sizers. Inputs are real-valued
// copies of byte counts; results are real unless they are memory amounts.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "memsizer/core.hpp"

namespace memsizer::stats {

class StatsError : public std::invalid_argument {
 public:
  enum class Kind { LengthMismatch, TooFewSamples, DegenerateX, EmptyInput, InvalidArgument };

  StatsError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// y = slope * x + intercept
struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

struct FitConfig {
  double lambda = 1.0 / 50.0;
  int max_iterations = 10'000;
  double rel_tolerance = 1e-9;
};

struct FitResult {
  LinearModel model;
  double loss = 0.0;
  int iterations = 0;
  /// False when max_iterations ran out; model is then the best point seen.
  bool converged = true;
};

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

LinearModel ols_fit(std::span<const double> x, std::span<const double> y);

/// Sum of squared residuals, with residuals where the model is at or above
/// the observation (overprediction) scaled by lambda.
double asymmetric_loss(std::span<const double> x, std::span<const double> y,
                       const LinearModel& model, double lambda);

/// Minimizes asymmetric_loss over (slope, intercept), starting from OLS.
FitResult asymmetric_fit(std::span<const double> x, std::span<const double> y,
                         const FitConfig& cfg = {});

/// Twice the weighted unbiased standard deviation of the residuals
/// model(x_i) - y_i, with weights falling off linearly in |x_i - x_n|
/// relative to the largest input seen (x_n included). Small samples
/// (count < 10) get a flat weight bonus of (1 - count/10)/100.
MemBytes weighted_offset(std::span<const double> x, std::span<const double> y,
                         const LinearModel& model, double x_n, std::size_t count);

/// Sample standard deviation (denominator n - 1) of observed - predicted.
double residual_stddev(std::span<const double> x, std::span<const double> y,
                       const LinearModel& model);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
MemBytes percentile(std::span<const MemBytes> values, double p);

}  // namespace memsizer::stats
