#pragma once

// Learning-curve metrics: window success rates, the stable rate, convergence
// steps to a fraction of the stable rate, and the acceleration ratio.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace graspwarm::metrics {

struct StabilityParams {
  double delta = 0.05;
  std::size_t k = 5;
};

struct MetricParams {
  std::size_t window = 50;
  StabilityParams stability{};
};

inline constexpr std::array<int, 5> kPercents{50, 60, 70, 80, 90};

/// y(i) = successes in the i-th non-overlapping box of length L divided by L.
/// A trailing partial box is dropped.
inline std::vector<double> window_rates(const std::vector<int>& outcomes, std::size_t L) {
  if (L == 0) throw std::invalid_argument("window_rates: window must be >= 1");
  if (outcomes.size() < L)
    throw std::invalid_argument("window_rates: curve of " + std::to_string(outcomes.size()) +
                                " attempts is shorter than the window " + std::to_string(L));
  const std::size_t n = outcomes.size() / L;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t hits = 0;
    for (std::size_t j = i * L; j < (i + 1) * L; ++j) {
      if (outcomes[j] != 0 && outcomes[j] != 1) throw std::invalid_argument("window_rates: outcomes must be 0 or 1");
      hits += static_cast<std::size_t>(outcomes[j]);
    }
    y[i] = static_cast<double>(hits) / static_cast<double>(L);
  }
  return y;
}

/// Stride-1 moving average of width L, for plotting only.
inline std::vector<double> overlapping_rates(const std::vector<int>& outcomes, std::size_t L) {
  if (L == 0 || outcomes.size() < L) throw std::invalid_argument("overlapping_rates: curve shorter than window");
  std::vector<double> y;
  double hits = 0.0;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    hits += outcomes[j];
    if (j >= L) hits -= outcomes[j - L];
    if (j + 1 >= L) y.push_back(hits / static_cast<double>(L));
  }
  return y;
}

struct StableRate {
  double value = 0.0;
  std::size_t index = 0;  // 1-based n* of the qualifying run
};

/// First n* such that |y(i) - y(i-1)| < delta for the k consecutive i ending
/// at n*; the stable rate is the mean of y(n*-k+1 .. n*).
inline std::optional<StableRate> stable_rate(const std::vector<double>& y, const StabilityParams& sp) {
  if (sp.k == 0) throw std::invalid_argument("stable_rate: k must be >= 1");
  if (!(sp.delta > 0.0)) throw std::invalid_argument("stable_rate: delta must be > 0");
  if (y.size() < sp.k + 1) throw std::invalid_argument("stable_rate: need at least k + 1 window rates");
  std::size_t run = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    run = std::abs(y[i] - y[i - 1]) < sp.delta ? run + 1 : 0;
    if (run == sp.k) {
      double s = 0.0;
      for (std::size_t j = i + 1 - sp.k; j <= i; ++j) s += y[j];
      return StableRate{s / static_cast<double>(sp.k), i + 1};
    }
  }
  return std::nullopt;
}

/// Index*L of the first window with y >= (p/100) * g_bar; nullopt means never.
/// A 1e-12 slack absorbs rounding in the product.
inline std::optional<std::size_t> convergence_steps(const std::vector<double>& y, std::size_t L, double g_bar,
                                                    double p) {
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("convergence_steps: p must lie in (0, 100]");
  const double threshold = p / 100.0 * g_bar;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] >= threshold - 1e-12) return (i + 1) * L;
  return std::nullopt;
}

/// m = (r - r') / r'.
inline double acceleration_ratio(double r, double r_prime) {
  if (r_prime == 0.0) throw std::invalid_argument("acceleration_ratio: accelerated steps r' must be nonzero");
  if (r < 0.0 || r_prime < 0.0) throw std::invalid_argument("acceleration_ratio: steps must be positive");
  return (r - r_prime) / r_prime;
}

/// Per-run summary. When no stable run exists, G_bar falls back to the mean of
/// the last k window rates and `converged` is false.
struct RunMetrics {
  double g_final = 0.0;  // last window rate
  double g_bar = 0.0;
  bool converged = false;
  std::array<std::optional<std::size_t>, kPercents.size()> cs{};

  std::optional<std::size_t> cs_at(int p) const {
    for (std::size_t i = 0; i < kPercents.size(); ++i)
      if (kPercents[i] == p) return cs[i];
    throw std::invalid_argument("cs_at: unsupported percent " + std::to_string(p));
  }
};

inline RunMetrics compute_run_metrics(const std::vector<int>& outcomes, const MetricParams& mp) {
  const std::vector<double> y = window_rates(outcomes, mp.window);
  RunMetrics m;
  m.g_final = y.back();
  if (auto sr = stable_rate(y, mp.stability)) {
    m.g_bar = sr->value;
    m.converged = true;
  } else {
    const std::size_t k = std::min(mp.stability.k, y.size());
    double s = 0.0;
    for (std::size_t j = y.size() - k; j < y.size(); ++j) s += y[j];
    m.g_bar = s / static_cast<double>(k);
  }
  for (std::size_t i = 0; i < kPercents.size(); ++i) m.cs[i] = convergence_steps(y, mp.window, m.g_bar, kPercents[i]);
  return m;
}

inline nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json cs = nlohmann::json::object();
  for (std::size_t i = 0; i < kPercents.size(); ++i) {
    const std::string key = std::to_string(kPercents[i]);
    cs[key] = m.cs[i] ? nlohmann::json(*m.cs[i]) : nlohmann::json("never");
  }
  return {{"G_final", m.g_final}, {"G_bar", m.g_bar}, {"Cs", cs}, {"converged", m.converged}};
}

inline RunMetrics run_metrics_from_json(const nlohmann::json& j) {
  RunMetrics m;
  m.g_final = j.at("G_final").get<double>();
  m.g_bar = j.at("G_bar").get<double>();
  m.converged = j.at("converged").get<bool>();
  for (std::size_t i = 0; i < kPercents.size(); ++i) {
    const auto& v = j.at("Cs").at(std::to_string(kPercents[i]));
    if (v.is_number()) m.cs[i] = v.get<std::size_t>();
  }
  return m;
}

}  // namespace graspwarm::metrics
