#include <cmath>

#include <gtest/gtest.h>

#include "graspwarm/metrics.hpp"
#include "graspwarm/rng.hpp"

using namespace graspwarm;
using namespace graspwarm::metrics;

namespace {

std::vector<int> random_outcomes(std::size_t n, double p_start, double p_end, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = p_start + (p_end - p_start) * static_cast<double>(i) / static_cast<double>(n);
    out[i] = rng.uniform() < p ? 1 : 0;
  }
  return out;
}

}  // namespace

TEST(Metrics, WindowRatesExamples) {
  EXPECT_EQ(window_rates(std::vector<int>(10, 1), 5), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(window_rates({1, 0, 1, 0, 1, 1, 1, 1}, 4), (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(window_rates({1, 1, 0, 1, 1}, 2), (std::vector<double>{1.0, 0.5}));
  EXPECT_THROW(window_rates({1, 0}, 5), std::invalid_argument);
  EXPECT_THROW(window_rates({1, 2}, 2), std::invalid_argument);
  EXPECT_THROW(window_rates({1, 0}, 0), std::invalid_argument);
}

TEST(Metrics, WindowRatesMatchDirectCount) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto o = random_outcomes(503, 0.1, 0.9, seed);
    const auto y = window_rates(o, 50);
    ASSERT_EQ(y.size(), 10u);
    double lhs = 0.0;
    for (double v : y) lhs += v * 50;
    int rhs = 0;
    for (std::size_t i = 0; i < 500; ++i) rhs += o[i];
    EXPECT_NEAR(lhs, rhs, 1e-9);
    for (double v : y) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, OverlappingRates) {
  const auto y = overlapping_rates({1, 0, 1, 1}, 2);
  EXPECT_EQ(y, (std::vector<double>{0.5, 0.5, 1.0}));
}

TEST(Metrics, StableRateExamples) {
  const auto c = stable_rate(std::vector<double>(6, 0.8), {0.05, 3});
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->value, 0.8, 1e-12);
  EXPECT_EQ(c->index, 4u);

  EXPECT_FALSE(stable_rate({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0.05, 3}));

  const auto s = stable_rate({0.5, 0.7, 0.79, 0.80, 0.81, 0.80}, {0.05, 3});
  ASSERT_TRUE(s);
  EXPECT_NEAR(s->value, (0.80 + 0.81 + 0.80) / 3, 1e-12);
  EXPECT_NEAR(s->value, 0.8033, 1e-4);
  EXPECT_EQ(s->index, 6u);

  EXPECT_THROW(stable_rate({0.1, 0.2}, {0.05, 3}), std::invalid_argument);
  EXPECT_THROW(stable_rate({0.1, 0.2, 0.3}, {0.0, 1}), std::invalid_argument);
}

TEST(Metrics, StableRateDiffMustBeStrictlyBelowDelta) {
  // every diff equals delta exactly (binary fractions avoid rounding)
  EXPECT_FALSE(stable_rate({0.0, 0.25, 0.5, 0.75, 1.0}, {0.25, 2}));
}

TEST(Metrics, StableRateMatchesScanOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    std::vector<double> y(12);
    for (auto& v : y) v = std::round(rng.uniform() * 10) / 10.0;
    if (seed % 2) {
      for (std::size_t i = 6; i < 12; ++i) y[i] = 0.6 + 0.02 * static_cast<double>(rng.below(2));
    }
    const StabilityParams sp{0.05, 3};
    std::optional<double> want;
    for (std::size_t n = sp.k; n < y.size() && !want; ++n) {
      bool ok = true;
      for (std::size_t i = n - sp.k + 1; i <= n; ++i) ok = ok && std::abs(y[i] - y[i - 1]) < sp.delta;
      if (ok) want = (y[n] + y[n - 1] + y[n - 2]) / 3.0;
    }
    const auto got = stable_rate(y, sp);
    ASSERT_EQ(got.has_value(), want.has_value()) << seed;
    if (got) EXPECT_NEAR(got->value, *want, 1e-12);
  }
}

TEST(Metrics, ConvergenceStepsExamples) {
  const std::vector<double> y{0.2, 0.5, 0.8, 0.8};
  EXPECT_EQ(convergence_steps(y, 100, 0.8, 50), 200u);
  EXPECT_EQ(convergence_steps({0.1, 0.3, 0.6, 0.9}, 100, 0.9, 100), 400u);
  EXPECT_FALSE(convergence_steps({0.1, 0.2}, 100, 0.8, 90));
  EXPECT_THROW(convergence_steps(y, 100, 0.8, 0), std::invalid_argument);
  // 0.7 * 0.7 rounds above 0.49 in binary; the slack keeps the window that equals it
  EXPECT_EQ(convergence_steps({0.2, 0.49}, 50, 0.7, 70), 100u);
}

TEST(Metrics, ConvergenceStepsMatchScanOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = window_rates(random_outcomes(500, 0.0, 0.9, seed), 50);
    const double g = 0.7;
    for (int p : kPercents) {
      std::optional<std::size_t> want;
      for (std::size_t i = y.size(); i-- > 0;)
        if (y[i] * 100.0 >= p * g - 1e-9) want = (i + 1) * 50;
      EXPECT_EQ(convergence_steps(y, 50, g, p), want) << seed << " " << p;
    }
  }
}

TEST(Metrics, AccelerationRatioExamples) {
  EXPECT_EQ(acceleration_ratio(150, 150), 0.0);
  EXPECT_EQ(acceleration_ratio(200, 100), 1.0);
  EXPECT_NEAR(acceleration_ratio(363, 100), 2.63, 1e-12);
  EXPECT_THROW(acceleration_ratio(100, 0), std::invalid_argument);
}

TEST(Metrics, RunMetricsConvergedCurve) {
  std::vector<int> o;
  for (int w = 0; w < 10; ++w) {
    const int hits = w < 3 ? 10 * w : 40;  // 0, 0.2, 0.4, then 0.8 flat
    for (int i = 0; i < 50; ++i) o.push_back(i < hits ? 1 : 0);
  }
  const RunMetrics m = compute_run_metrics(o, {});
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(m.g_bar, 0.8, 1e-12);
  EXPECT_NEAR(m.g_final, 0.8, 1e-12);
  EXPECT_EQ(m.cs_at(50), 150u);
  EXPECT_EQ(m.cs_at(60), 200u);
  EXPECT_EQ(m.cs_at(90), 200u);
  EXPECT_THROW(m.cs_at(55), std::invalid_argument);
}

TEST(Metrics, RunMetricsFallbackWhenNotConverged) {
  std::vector<int> o;
  for (int w = 0; w < 10; ++w)
    for (int i = 0; i < 50; ++i) o.push_back(i < (w % 2 ? 40 : 10) ? 1 : 0);
  const RunMetrics m = compute_run_metrics(o, {});
  EXPECT_FALSE(m.converged);
  EXPECT_NEAR(m.g_bar, (0.8 + 0.2 + 0.8 + 0.2 + 0.8) / 5, 1e-12);
  EXPECT_EQ(m.cs_at(50), 100u);
}

TEST(Metrics, JsonRoundTrip) {
  RunMetrics m;
  m.g_final = 0.5;
  m.g_bar = 0.625;
  m.converged = true;
  m.cs = {50, 100, std::nullopt, std::nullopt, std::nullopt};
  const nlohmann::json j = to_json(m);
  EXPECT_EQ(j.at("Cs").at("70"), "never");
  EXPECT_EQ(j.at("Cs").at("60"), 100);
  const RunMetrics back = run_metrics_from_json(j);
  EXPECT_EQ(back.cs, m.cs);
  EXPECT_EQ(back.g_bar, m.g_bar);
  EXPECT_EQ(back.converged, true);
}
