#include "memsizer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memsizer::stats {

namespace {

void require_pairs(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) {
    throw StatsError(StatsError::Kind::LengthMismatch,
                     "x and y differ in length (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
  }
  if (x.size() < min_n) {
    throw StatsError(StatsError::Kind::TooFewSamples,
                     "need at least " + std::to_string(min_n) + " samples, got " +
                         std::to_string(x.size()));
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

void require_spread(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw StatsError(StatsError::Kind::DegenerateX, "all inputs are equal");
}

LinearModel weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw;
  const double ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - xm;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - ym);
  }
  const double slope = sxy / sxx;
  return {slope, ym - slope * xm};
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  const double xm = mean(x);
  const double ym = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - xm;
    const double dy = y[i] - ym;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LinearModel ols_fit(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  require_spread(x);
  const std::vector<double> ones(x.size(), 1.0);
  return weighted_least_squares(x, y, ones);
}

double asymmetric_loss(std::span<const double> x, std::span<const double> y,
                       const LinearModel& model, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model(x[i]);
    loss += (r > 0.0 ? 1.0 : lambda) * r * r;
  }
  return loss;
}

FitResult asymmetric_fit(std::span<const double> x, std::span<const double> y,
                         const FitConfig& cfg) {
  require_pairs(x, y, 2);
  require_spread(x);
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) {
    throw StatsError(StatsError::Kind::InvalidArgument, "lambda must lie in (0, 1]");
  }
  if (cfg.max_iterations < 1 || !(cfg.rel_tolerance > 0.0)) {
    throw StatsError(StatsError::Kind::InvalidArgument, "invalid fit configuration");
  }

  FitResult best;
  best.model = ols_fit(x, y);
  best.loss = asymmetric_loss(x, y, best.model, cfg.lambda);
  if (best.loss == 0.0) return best;

  // The loss is a convex, continuously differentiable piecewise quadratic.
  // Each step jumps to the weighted least-squares solution for the current
  // residual signs (the Newton point) with Armijo backtracking.
  std::vector<double> w(x.size());
  best.converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    best.iterations = it;
    double grad_a = 0.0, grad_b = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - best.model(x[i]);
      w[i] = r > 0.0 ? 1.0 : cfg.lambda;
      grad_a -= 2.0 * w[i] * r * x[i];
      grad_b -= 2.0 * w[i] * r;
    }
    const LinearModel target = weighted_least_squares(x, y, w);
    const double da = target.slope - best.model.slope;
    const double db = target.intercept - best.model.intercept;
    const double slope_along = grad_a * da + grad_b * db;
    if (!(slope_along < 0.0)) {
      best.converged = true;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    LinearModel cand;
    double cand_loss = 0.0;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      cand = {best.model.slope + step * da, best.model.intercept + step * db};
      cand_loss = asymmetric_loss(x, y, cand, cfg.lambda);
      if (cand_loss <= best.loss + 1e-4 * step * slope_along) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      best.converged = true;
      break;
    }
    const double rel = (best.loss - cand_loss) / best.loss;
    best.model = cand;
    best.loss = cand_loss;
    if (cand_loss == 0.0 || (step == 1.0 && rel < cfg.rel_tolerance)) {
      best.converged = true;
      break;
    }
  }
  return best;
}

MemBytes weighted_offset(std::span<const double> x, std::span<const double> y,
                         const LinearModel& model, double x_n, std::size_t count) {
  require_pairs(x, y, 0);
  if (x.empty()) return MemBytes{0};

  double scale = x_n;
  for (double xi : x) scale = std::max(scale, xi);
  const double bonus = std::max(1.0 - static_cast<double>(count) / 10.0, 0.0) / 100.0;

  // Deviations are taken relative to d_0 so that identical residuals give an
  // exact zero instead of rounding noise; the variance is shift-invariant.
  const double d0 = model(x[0]) - y[0];
  double v1 = 0.0, v2 = 0.0, sum_wd = 0.0;
  std::vector<double> wts(x.size()), dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double falloff = scale > 0.0 ? std::abs(x[i] - x_n) / scale : 0.0;
    wts[i] = 1.0 - falloff + bonus;
    dev[i] = (model(x[i]) - y[i]) - d0;
    v1 += wts[i];
    v2 += wts[i] * wts[i];
    sum_wd += wts[i] * dev[i];
  }
  if (!(v1 > 0.0)) return MemBytes{0};
  const double m = sum_wd / v1;
  double num = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) num += wts[i] * (dev[i] - m) * (dev[i] - m);
  const double denom = v1 - v2 / v1;
  if (!(denom > 0.0) || !(num > 0.0)) return MemBytes{0};
  return ceil_bytes(2.0 * std::sqrt(num / denom));
}

double residual_stddev(std::span<const double> x, std::span<const double> y,
                       const LinearModel& model) {
  require_pairs(x, y, 2);
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = y[i] - model(x[i]);
  const double rm = mean(r);
  double ss = 0.0;
  for (double e : r) ss += (e - rm) * (e - rm);
  return std::sqrt(ss / static_cast<double>(r.size() - 1));
}

MemBytes percentile(std::span<const MemBytes> values, double p) {
  if (values.empty()) throw StatsError(StatsError::Kind::EmptyInput, "percentile of empty list");
  if (!(p > 0.0 && p <= 100.0)) {
    throw StatsError(StatsError::Kind::InvalidArgument, "percentile must lie in (0, 100]");
  }
  const auto n = values.size();
  // p * n / 100 rather than p / 100 * n: exact for integral p.
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<MemBytes> sorted(values.begin(), values.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

}  // namespace memsizer::stats
