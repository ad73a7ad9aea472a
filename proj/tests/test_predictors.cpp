#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "memsizer/predictors.hpp"
#include "memsizer/random.hpp"
#include "ponder_cases.hpp"

using namespace memsizer;
using testsupport::history_of;

namespace {

constexpr std::uint64_t GiB = kGiB;
constexpr std::uint64_t MiB = kMiB;

std::vector<std::uint64_t> gib_steps(std::size_t n) {
  std::vector<std::uint64_t> v;
  for (std::uint64_t k = 1; k <= n; ++k) v.push_back(k * GiB);
  return v;
}

}  // namespace

TEST_SUITE("predictors") {
  TEST_CASE("observe keeps summaries") {
    SizingConfig cfg;
    PredictorState state;
    observe(state, Observation{{"t"}, InputBytes(10), MemBytes::gib(1), Millis(5), true}, cfg);
    const auto& h = state.history({"t"});
    CHECK(h.count() == 1);
    CHECK(h.max_peak == MemBytes::gib(1));

    const PredictorState before = state;
    observe(state, Observation{{"t"}, InputBytes(99), MemBytes::gib(9), Millis(5), false}, cfg);
    CHECK(state.history({"t"}).count() == 1);
    CHECK(state.history({"t"}).max_peak == before.history({"t"}).max_peak);

    cfg.train_on_failures = true;
    observe(state, Observation{{"t"}, InputBytes(99), MemBytes::gib(9), Millis(5), false}, cfg);
    CHECK(state.history({"t"}).count() == 2);
    CHECK(state.history({"unseen"}).count() == 0);
  }

  TEST_CASE("summaries match a rescan") {
    RandomStream rng(4);
    SizingConfig cfg;
    PredictorState state;
    std::vector<Observation> seen;
    for (int i = 0; i < 30; ++i) {
      Observation o{{"t"}, InputBytes(rng.below(1000) + 1), MemBytes(rng.below(5000) + 1),
                    Millis(1), true};
      observe(state, o, cfg);
      seen.push_back(o);
      const auto& h = state.history({"t"});
      auto by_peak = [](const Observation& a, const Observation& b) {
        return a.peak_mem < b.peak_mem;
      };
      auto by_input = [](const Observation& a, const Observation& b) {
        return a.input_size < b.input_size;
      };
      CHECK(h.min_peak == std::min_element(seen.begin(), seen.end(), by_peak)->peak_mem);
      CHECK(h.max_peak == std::max_element(seen.begin(), seen.end(), by_peak)->peak_mem);
      CHECK(h.min_input == std::min_element(seen.begin(), seen.end(), by_input)->input_size);
      CHECK(h.max_input == std::max_element(seen.begin(), seen.end(), by_input)->input_size);
    }
  }

  TEST_CASE("ponder branch table") {
    for (const auto& row : testsupport::ponder_cases()) {
      CAPTURE(row.name);
      const auto h = history_of(row.x, row.y, row.cfg);
      const auto p = predict_ponder(h, InputBytes(row.x_n), MemBytes(row.y_user), row.cfg);
      CHECK(p.value.value() == row.expected);
      CHECK(p.path == row.path);
      CHECK(p.clamp == Clamp::None);
    }
  }

  TEST_CASE("ponder with no history returns the clamped user value") {
    SizingConfig cfg;
    const TaskHistory empty;
    auto p = predict_ponder(empty, InputBytes(1), MemBytes::gib(3), cfg);
    CHECK(p.value == MemBytes::gib(3));
    CHECK(p.path == PredictionPath::UserDefault);
    p = predict_ponder(empty, InputBytes(1), MemBytes::gib(100), cfg);
    CHECK(p.value == MemBytes::gib(64));
    CHECK(p.clamp == Clamp::ClampedHigh);
  }

  TEST_CASE("ponder ignores the order observations arrive in") {
    RandomStream rng(12);
    SizingConfig cfg;
    for (int t = 0; t < 20; ++t) {
      std::vector<std::uint64_t> x, y;
      for (int i = 0; i < 12; ++i) {
        x.push_back(rng.between(1, 10) * GiB + rng.below(GiB));
        y.push_back(x.back() / 2 + GiB + rng.below(GiB));
      }
      const auto forward = history_of(x, y);
      std::reverse(x.begin(), x.end());
      std::reverse(y.begin(), y.end());
      const auto backward = history_of(x, y);
      const InputBytes xn(5 * GiB);
      CHECK(predict_ponder(forward, xn, MemBytes::gib(16), cfg).value ==
            predict_ponder(backward, xn, MemBytes::gib(16), cfg).value);
    }
  }

  TEST_CASE("ponder overshoots noise-free linear data by the static floor") {
    SizingConfig cfg;
    RandomStream rng(31);
    std::vector<std::uint64_t> x, y;
    for (int i = 0; i < 40; ++i) {
      const std::uint64_t in = rng.between(1, 10) * GiB + rng.below(GiB);
      const std::uint64_t peak = in / 2 + GiB;
      if (x.size() >= 5) {
        const auto h = history_of(x, y);
        const auto p = predict_ponder(h, InputBytes(in), MemBytes::gib(20), cfg);
        CHECK(p.value.value() >= peak + cfg.static_offset.value());
      }
      x.push_back(in);
      y.push_back(peak);
    }
  }

  TEST_CASE("witt-lr") {
    SizingConfig cfg;
    CHECK(predict_witt_lr(TaskHistory{}, InputBytes(5), MemBytes::gib(2), cfg).path ==
          PredictionPath::UserDefault);

    // Exact line: prediction is the line value itself.
    auto h = history_of(gib_steps(4), {GiB + 512 * MiB, 2 * GiB + 512 * MiB,
                                       3 * GiB + 512 * MiB, 4 * GiB + 512 * MiB});
    auto p = predict_witt_lr(h, InputBytes(5 * GiB), MemBytes::gib(2), cfg);
    CHECK(p.value.value() == 5 * GiB + 512 * MiB);
    CHECK(p.path == PredictionPath::WittRegression);

    // Independent normal equations plus stddev in rationals.
    h = history_of(gib_steps(5), {1288490188, 2254857830, 3113851289, 4617089843, 5153960755});
    p = predict_witt_lr(h, InputBytes(7 * GiB / 2), MemBytes::gib(2), cfg);
    CHECK(p.value.value() == 3988296849);

    // All inputs equal leaves no line to fit.
    h = history_of({GiB, GiB, GiB}, {GiB, 2 * GiB, 3 * GiB});
    CHECK(predict_witt_lr(h, InputBytes(GiB), MemBytes::gib(2), cfg).path ==
          PredictionPath::UserDefault);
  }

  TEST_CASE("percentile sizer") {
    SizingConfig cfg;
    CHECK(predict_percentile(TaskHistory{}, InputBytes(5), MemBytes::gib(2), cfg).value ==
          MemBytes::gib(2));
    std::vector<std::uint64_t> x, y;
    for (std::uint64_t i = 1; i <= 100; ++i) {
      x.push_back(i);
      y.push_back(i * MiB);
    }
    auto p = predict_percentile(history_of(x, y), InputBytes(1), MemBytes::gib(2), cfg);
    CHECK(p.value == MemBytes::mib(128));  // 95 MB clamps up to the lower bound
    CHECK(p.clamp == Clamp::ClampedLow);

    const std::vector<std::uint64_t> peaks{7, 3, 9, 1, 5, 8, 2, 6};
    std::vector<std::uint64_t> scaled;
    for (auto v : peaks) scaled.push_back(v * GiB);
    p = predict_percentile(history_of(gib_steps(8), scaled), InputBytes(1), MemBytes::gib(2),
                           cfg);
    // ceil(0.95 * 8) = 8th smallest.
    CHECK(p.value == MemBytes::gib(9));
    CHECK(p.path == PredictionPath::PercentileValue);
  }

  TEST_CASE("user sizer clamps") {
    SizingConfig cfg;
    auto p = predict_user(TaskHistory{}, InputBytes(0), MemBytes::gib(4), cfg);
    CHECK(p.value == MemBytes::gib(4));
    CHECK(p.clamp == Clamp::None);
    p = predict_user(TaskHistory{}, InputBytes(0), MemBytes::gib(100), cfg);
    CHECK(p.value == MemBytes::gib(64));
    CHECK(p.clamp == Clamp::ClampedHigh);
    CHECK(path_label(p) == "user_default:clamped_high");
    p = predict_user(TaskHistory{}, InputBytes(0), MemBytes::mib(1), cfg);
    CHECK(p.value == MemBytes::mib(128));
    CHECK(p.clamp == Clamp::ClampedLow);
  }

  TEST_CASE("memory sizer wiring") {
    MemorySizer oracle(SizerKind::Oracle, SizingConfig{});
    PhysicalTaskSpec t;
    t.abstract = {"t"};
    t.true_peak = MemBytes(12345);
    t.user_mem = MemBytes::gib(4);
    CHECK(oracle.predict(t).value == MemBytes(12345));
    CHECK(oracle.predict(t).path == PredictionPath::Oracle);

    MemorySizer ponder(SizerKind::Ponder, SizingConfig{});
    for (std::uint64_t k = 1; k <= 6; ++k) {
      ponder.observe({{"t"}, InputBytes(k * GiB), MemBytes(2 * k * GiB + 100 * MiB), Millis(1),
                      true});
    }
    t.input_size = InputBytes(7 * GiB / 2);
    t.user_mem = MemBytes::gib(20);
    CHECK(ponder.predict(t).value.value() == 7'755'268'096);

    CHECK(parse_sizer("witt-lr") == SizerKind::WittLr);
    CHECK(to_string(SizerKind::Percentile) == "percentile");
    CHECK_THROWS_AS(parse_sizer("magic"), std::invalid_argument);

    SizingConfig bad;
    bad.lower_bound = MemBytes::gib(100);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
