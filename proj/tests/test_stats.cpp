#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "memsizer/random.hpp"
#include "memsizer/stats.hpp"

using namespace memsizer;
using namespace memsizer::stats;

namespace {

// Normal equations in long double, written out independently of ols_fit.
LinearModel normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double b = (sy - a * sx) / n;
  return {static_cast<double>(a), static_cast<double>(b)};
}

std::size_t strict_underpredictions(const std::vector<double>& x, const std::vector<double>& y,
                                    const LinearModel& m) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += y[i] > m(x[i]) ? 1 : 0;
  return n;
}

double sample_stddev(const std::vector<double>& d) {
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(d.size() - 1));
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("pearson examples") {
    const std::vector<double> x3{1, 2, 3};
    CHECK(pearson(x3, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(x3, std::vector<double>{5, 5, 5}) == 0.0);
    CHECK(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 8, 11, 7}) ==
          doctest::Approx(-0.42426406871192851464).epsilon(1e-14));
    CHECK_THROWS_AS(pearson(x3, std::vector<double>{1, 2}), StatsError);
  }

  TEST_CASE("pearson is order symmetric and affine invariant") {
    RandomStream rng(5);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> x(12), y(12);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0, 1e10);
        y[i] = 0.3 * x[i] + rng.uniform(0, 4e9);
      }
      const double r = pearson(x, y);
      std::vector<std::size_t> perm(x.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::reverse(perm.begin(), perm.end());
      std::vector<double> px, py, sx, sy;
      for (auto i : perm) {
        px.push_back(x[i]);
        py.push_back(y[i]);
      }
      for (std::size_t i = 0; i < x.size(); ++i) {
        sx.push_back(3.5 * x[i] + 1e9);
        sy.push_back(0.25 * y[i] + 7);
      }
      CHECK(pearson(px, py) == doctest::Approx(r).epsilon(1e-12));
      CHECK(pearson(sx, y) == doctest::Approx(r).epsilon(1e-12));
      CHECK(pearson(x, sy) == doctest::Approx(r).epsilon(1e-12));
      CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-12));
    }
  }

  TEST_CASE("ols examples") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(3 * v + 7);
    auto m = ols_fit(x, y);
    CHECK(m.slope == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.intercept == doctest::Approx(7.0).epsilon(1e-12));

    m = ols_fit(std::vector<double>{1, 3}, std::vector<double>{10, 20});
    CHECK(m.slope == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m.intercept == doctest::Approx(5.0).epsilon(1e-12));

    CHECK_THROWS_AS(ols_fit(std::vector<double>{2, 2}, std::vector<double>{1, 3}), StatsError);
    CHECK_THROWS_AS(ols_fit(std::vector<double>{2}, std::vector<double>{1}), StatsError);
  }

  TEST_CASE("ols on noisy points matches the normal equations") {
    RandomStream rng(11);
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
      x.push_back(rng.uniform(1e9, 1e10));
      y.push_back(0.7 * x.back() + 2e8 + rng.uniform(-5e8, 5e8));
    }
    const auto got = ols_fit(x, y);
    const auto want = normal_equations(x, y);
    CHECK(got.slope == doctest::Approx(want.slope).epsilon(1e-9));
    CHECK(got.intercept == doctest::Approx(want.intercept).epsilon(1e-9));
  }

  TEST_CASE("asymmetric fit examples") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> exact;
    for (double v : x) exact.push_back(2 * v + 1);
    auto fit = asymmetric_fit(x, exact);
    CHECK(fit.loss == doctest::Approx(0.0));
    CHECK(fit.model.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.model.intercept == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> y{10, 12, 11, 20, 13};
    fit = asymmetric_fit(x, y, FitConfig{1.0, 10000, 1e-9});
    const auto ols = ols_fit(x, y);
    CHECK(fit.model.slope == doctest::Approx(ols.slope).epsilon(1e-6));
    CHECK(fit.model.intercept == doctest::Approx(ols.intercept).epsilon(1e-6));

    // Exact optimum from enumerating residual sign patterns in rationals.
    fit = asymmetric_fit(x, y);
    CHECK(fit.converged);
    CHECK(fit.model.slope == doctest::Approx(3.085350318471338).epsilon(1e-9));
    CHECK(fit.model.intercept == doctest::Approx(7.314649681528662).epsilon(1e-9));
    CHECK(fit.loss == doctest::Approx(2.6841783439490445).epsilon(1e-9));
  }

  TEST_CASE("asymmetric loss weights overprediction by lambda") {
    const std::vector<double> x{0, 1};
    const std::vector<double> y{0, 0};
    const LinearModel over{0, 2};
    const LinearModel under{0, -2};
    CHECK(asymmetric_loss(x, y, over, 0.02) == doctest::Approx(2 * 4 * 0.02));
    CHECK(asymmetric_loss(x, y, under, 0.02) == doctest::Approx(2 * 4.0));
    // A zero residual contributes nothing either way.
    CHECK(asymmetric_loss(x, y, LinearModel{0, 0}, 0.02) == 0.0);
  }

  TEST_CASE("asymmetric fit never loses to OLS and lowering lambda never adds underpredictions") {
    RandomStream rng(2024);
    for (int t = 0; t < 60; ++t) {
      const std::size_t n = 3 + rng.below(18);
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n; ++i) {
        x.push_back(rng.uniform(1e9, 2e10));
        y.push_back(0.4 * x.back() + 1e9 + rng.uniform(-2e9, 2e9));
      }
      const auto ols = ols_fit(x, y);
      const double lambda = 1.0 / 50.0;
      const auto fit = asymmetric_fit(x, y, FitConfig{lambda, 10000, 1e-12});
      CHECK(fit.loss <= asymmetric_loss(x, y, ols, lambda) * (1 + 1e-12));
      CHECK(strict_underpredictions(x, y, fit.model) <= strict_underpredictions(x, y, ols));
    }
  }

  TEST_CASE("weighted offset examples") {
    // Model interpolates a shifted copy of the data: every residual is equal.
    const std::vector<double> x{1, 2, 4, 7, 9};
    std::vector<double> y;
    for (double v : x) y.push_back(2 * v + 1 - 0.5);
    CHECK(weighted_offset(x, y, LinearModel{2, 1}, 5, 5).value() == 0);

    // Independent rational evaluation gives 1.2053708719...; offsets round up.
    const std::vector<double> y2{3, 5.5, 8, 15, 18.5};
    CHECK(weighted_offset(x, y2, LinearModel{2, 1}, 5, 5).value() == 2);
  }

  TEST_CASE("weighted offset reduces to twice the sample stddev with equal weights") {
    RandomStream rng(3);
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = 10 + rng.below(10);
      const double xn = 5e9;
      std::vector<double> x(n, xn), y, d;
      const LinearModel m{0.5, 1e9};
      for (std::size_t i = 0; i < n; ++i) {
        y.push_back(m(xn) + rng.uniform(-1e9, 1e9));
        d.push_back(m(xn) - y.back());
      }
      const double want = 2 * sample_stddev(d);
      const auto got = weighted_offset(x, y, m, xn, n);
      CHECK(static_cast<double>(got.value()) >= want);
      CHECK(static_cast<double>(got.value()) - want < 1.0 + want * 1e-9);
    }
  }

  TEST_CASE("weighted offset ignores a common shift of data and intercept") {
    RandomStream rng(8);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> x, y, ys;
      for (int i = 0; i < 8; ++i) {
        x.push_back(rng.uniform(1e9, 9e9));
        y.push_back(0.5 * x.back() + rng.uniform(-1e9, 1e9));
        ys.push_back(y.back() + 3e9);
      }
      const LinearModel m{0.5, 2e8};
      const LinearModel ms{0.5, 2e8 + 3e9};
      const auto a = weighted_offset(x, y, m, 4e9, 8).value();
      const auto b = weighted_offset(x, ys, ms, 4e9, 8).value();
      CHECK(std::llabs(static_cast<long long>(a) - static_cast<long long>(b)) <= 1);
    }
  }

  TEST_CASE("residual stddev") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{2, 4, 9};
    // Residuals 0, 0, 3 against y = 2x.
    CHECK(residual_stddev(x, y, LinearModel{2, 0}) == doctest::Approx(std::sqrt(3.0)));
  }

  TEST_CASE("percentile examples and properties") {
    auto bytes = [](std::initializer_list<std::uint64_t> v) {
      std::vector<MemBytes> out;
      for (auto b : v) out.emplace_back(b);
      return out;
    };
    CHECK(percentile(bytes({5}), 95).value() == 5);
    std::vector<MemBytes> hundred;
    for (std::uint64_t i = 1; i <= 100; ++i) hundred.emplace_back(i);
    CHECK(percentile(hundred, 95).value() == 95);
    CHECK(percentile(bytes({3, 1, 4, 1, 5, 9, 2, 6}), 50).value() == 3);
    CHECK_THROWS_AS(percentile(std::vector<MemBytes>{}, 50), StatsError);
    CHECK_THROWS_AS(percentile(hundred, 0), StatsError);

    RandomStream rng(17);
    for (int t = 0; t < 30; ++t) {
      std::vector<MemBytes> v;
      const std::size_t n = 1 + rng.below(40);
      for (std::size_t i = 0; i < n; ++i) v.emplace_back(rng.below(1000));
      CHECK(percentile(v, 100) == *std::max_element(v.begin(), v.end()));
      MemBytes prev{0};
      for (double p = 1; p <= 100; p += 0.5) {
        const auto q = percentile(v, p);
        CHECK(q >= prev);
        prev = q;
      }
    }
  }
}
