// Runs the eight acceptance checks and prints one PASS/FAIL line per check.
// Exit status is nonzero when any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <set>
#include <string>

#include "graspwarm/grad_check.hpp"
#include "graspwarm/harness.hpp"
#include "graspwarm/rotate.hpp"

using namespace graspwarm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

net::NetInput random_input(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  net::NetInput in{net::Tensor({3, n, n}), net::Tensor({1, n, n})};
  for (double& v : in.color.values()) v = rng.uniform();
  for (double& v : in.depth.values()) v = rng.uniform(0, 2);
  return in;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome gradients() {
  Outcome o{true, ""};
  const net::NetworkParams p = net::init_params(101);
  Rng rng(5);
  net::Tensor target({8, 8});
  for (double& v : target.values()) v = rng.uniform(0.01, 1.0);
  const double s = target.sum();
  for (double& v : target.values()) v /= s;
  double worst = 0.0, worst_abs = 0.0;
  std::size_t checked = 0;
  for (net::LossKind k : {net::LossKind::kl, net::LossKind::mse, net::LossKind::smooth_l1}) {
    const net::GradCheckReport r = net::grad_check(p, {random_input(8, 7), target, net::Mode::distribution}, k);
    worst = std::max(worst, r.max_rel_err);
    worst_abs = std::max(worst_abs, r.max_abs_err);
    checked += r.checked;
    if (!r.pass) {
      o.pass = false;
      o.detail += net::to_string(k) + " failed at " + r.worst + "; ";
    }
  }
  o.detail += std::to_string(checked) + " coordinates, max abs err " + fmt("%.2e", worst_abs) +
              ", max rel err " + fmt("%.2e", worst);
  return o;
}

Outcome affordance_invariants() {
  affordance::DatasetConfig dc;
  dc.samples = 50;
  dc.workspace = {32, 32};
  dc.seed = 2024;
  double worst_sum = 0.0;
  for (const auto& smp : affordance::build_pretrain_dataset(dc))
    worst_sum = std::max(worst_sum, std::abs(smp.label.sum() - 1.0));
  bool peak_ok = true;
  double min_mass = 2.0, max_mass = 0.0;
  for (double sigma : {1.0, 2.5, 4.0, 6.0}) {
    const int n = 2 * static_cast<int>(std::ceil(5 * sigma)) + 1;
    const double c = (n - 1) / 2.0;
    const auto m = affordance::gaussian_heatmap({c, c}, sigma, n, n);
    peak_ok = peak_ok && m[static_cast<std::size_t>(c) * n + static_cast<std::size_t>(c)] ==
                             1.0 / (2.0 * std::numbers::pi * sigma * sigma);
    double mass = 0.0;
    for (double v : m) mass += v;
    min_mass = std::min(min_mass, mass);
    max_mass = std::max(max_mass, mass);
  }
  const bool pass = worst_sum <= 1e-6 && peak_ok && min_mass >= 0.999 && max_mass <= 1.0 + 1e-6;
  return {pass, "max |sum-1| " + fmt("%.1e", worst_sum) + ", peak exact " + (peak_ok ? "yes" : "no") +
                    ", 5-sigma mass in [" + fmt("%.5f", min_mass) + ", " + fmt("%.5f", max_mass) + "]"};
}

Outcome loss_comparison() {
  affordance::DatasetConfig dc;
  dc.samples = 50;
  dc.workspace = {32, 32};
  dc.seed = 7;
  const auto data = affordance::build_pretrain_dataset(dc);
  std::vector<sim::Scene> held;
  for (std::uint64_t k = 0; k < 20; ++k)
    held.push_back(sim::generate_scene(dc.n_objects, dc.workspace, derive_seed(99, k)));
  std::map<net::LossKind, double> mass;
  for (net::LossKind k : {net::LossKind::kl, net::LossKind::mse, net::LossKind::smooth_l1}) {
    pretrain::PretrainConfig pc;
    pc.loss = k;
    pc.seed = 3;
    mass[k] = pretrain::evaluate_background_mass(pretrain::pretrain_model(data, pc).params, held);
  }
  const double kl = mass[net::LossKind::kl];
  const bool pass = kl < mass[net::LossKind::mse] && kl < mass[net::LossKind::smooth_l1];
  return {pass, "background mass kl " + fmt("%.4f", kl) + ", mse " + fmt("%.4f", mass[net::LossKind::mse]) +
                    ", smooth_l1 " + fmt("%.4f", mass[net::LossKind::smooth_l1])};
}

Outcome warm_start_acceleration() {
  harness::ExperimentPlan plan;
  plan.variants = {{"scratch", false, false}, {"warm_start", true, false}};
  plan.object_counts = {4};
  plan.seeds = {0, 1, 2, 3, 4};
  plan.steps = 500;
  plan.workspace = 32;
  const fs::path out = fs::temp_directory_path() / "graspwarm_acceptance_warm";
  fs::remove_all(out);
  const auto recs = harness::run_experiment(plan, out);
  std::vector<std::optional<std::size_t>> s50, s60, w50, w60;
  for (const auto& r : recs) {
    if (!r.ok || !r.metrics) return {false, "run failed: " + r.error};
    auto& a = r.spec.variant.warm_start ? w50 : s50;
    auto& b = r.spec.variant.warm_start ? w60 : s60;
    a.push_back(r.metrics->cs_at(50));
    b.push_back(r.metrics->cs_at(60));
  }
  harness::emit_report(out);
  const auto ms = harness::median_steps(s50), mw = harness::median_steps(w50);
  const double inf = std::numeric_limits<double>::infinity();
  auto as_d = [&](const std::optional<std::size_t>& v) { return v ? static_cast<double>(*v) : inf; };
  int positive = 0;
  std::string per_seed;
  for (std::size_t i = 0; i < s50.size(); ++i) {
    const double r50 = as_d(s50[i]), q50 = as_d(w50[i]), r60 = as_d(s60[i]), q60 = as_d(w60[i]);
    const bool ok = r50 > q50 && r60 > q60;
    positive += ok;
    per_seed += " " + std::to_string(i) + ":" + fmt("%.0f", r50) + "/" + fmt("%.0f", q50) + "," + fmt("%.0f", r60) +
                "/" + fmt("%.0f", q60);
  }
  const bool median_ok = mw && (!ms || *mw <= 2.0 / 3.0 * *ms);
  const bool pass = median_ok && positive >= 4;
  return {pass, "median Cs50 scratch " + (ms ? fmt("%.0f", *ms) : std::string("never")) + " warm " +
                    (mw ? fmt("%.0f", *mw) : std::string("never")) + ", m>0 at Cs50 and Cs60 for " +
                    std::to_string(positive) + "/5 seeds (scratch/warm Cs50,Cs60:" + per_seed + ")"};
}

Outcome metrics_oracles() {
  bool ok = true;
  const auto sr = metrics::stable_rate({0.5, 0.7, 0.79, 0.80, 0.81, 0.80}, {0.05, 3});
  ok = ok && sr && std::abs(sr->value - 0.8033) < 1e-4;
  ok = ok && !metrics::stable_rate({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0.05, 3});
  ok = ok && metrics::convergence_steps({0.2, 0.5, 0.8, 0.8}, 100, 0.8, 50) == 200u;
  ok = ok && metrics::acceleration_ratio(200, 100) == 1.0 && std::abs(metrics::acceleration_ratio(363, 100) - 2.63) < 1e-12;
  const bool worked = ok;

  std::size_t mismatches = 0;
  Rng rng(77);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 6 + rng.below(15);
    std::vector<double> y(n);
    const double level = rng.uniform(0.2, 0.9);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = std::clamp(level * std::min(1.0, (i + 1.0) / (n / 2.0)) + rng.uniform(-0.04, 0.04), 0.0, 1.0);
    const metrics::StabilityParams sp{0.05, 1 + rng.below(4)};
    if (y.size() < sp.k + 1) continue;
    std::optional<double> want;
    for (std::size_t end = sp.k; end < n && !want; ++end) {
      bool run = true;
      for (std::size_t i = end + 1 - sp.k; i <= end; ++i) run = run && std::abs(y[i] - y[i - 1]) < sp.delta;
      if (run) {
        double s = 0.0;
        for (std::size_t i = end + 1 - sp.k; i <= end; ++i) s += y[i];
        want = s / static_cast<double>(sp.k);
      }
    }
    const auto got = metrics::stable_rate(y, sp);
    if (got.has_value() != want.has_value() || (got && std::abs(got->value - *want) > 1e-12)) ++mismatches;
    const double g = want.value_or(level);
    for (int p : metrics::kPercents) {
      std::optional<std::size_t> cs;
      for (std::size_t i = 0; i < n && !cs; ++i)
        if (y[i] >= p / 100.0 * g - 1e-12) cs = (i + 1) * 50;
      if (metrics::convergence_steps(y, 50, g, p) != cs) ++mismatches;
    }
    const double r = 50.0 * (1 + rng.below(10)), rp = 50.0 * (1 + rng.below(10));
    if (std::abs(metrics::acceleration_ratio(r, rp) - (r / rp - 1.0)) > 1e-12) ++mismatches;
  }
  return {worked && mismatches == 0,
          std::string("worked examples ") + (worked ? "ok" : "wrong") + ", oracle mismatches " +
              std::to_string(mismatches) + "/1000 curves"};
}

Outcome dqn_mechanics() {
  std::size_t greedy_bad = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    dqn::QOutput q{net::Tensor({16, 8, 8})};
    for (double& v : q.values.values()) v = rng.uniform();
    std::size_t best = 0;
    for (std::size_t k = 0; k < q.values.size(); ++k)
      if (q.values[k] > q.values[best]) best = k;
    const sim::GraspAction a = dqn::select_action(q, 0.0, rng);
    if (static_cast<std::size_t>(a.alpha_index) * 64 + a.x * 8 + a.y != best) ++greedy_bad;
  }

  const sim::Scene scene = sim::generate_scene(4, {32, 32}, 3);
  const sim::GraspAction act{11, 21, 5};
  const auto [next, out] = sim::execute_grasp(scene, act);
  const dqn::Transition t{sim::render_heightmaps(scene), act, static_cast<double>(out.reward),
                          sim::render_heightmaps(next), false, 1.0};
  const dqn::TransitionGradient g = dqn::transition_gradient(net::init_params(1), t, 0.7, dqn::OrientationPlans(32));
  std::size_t nonzero = 0;
  bool at_pixel = false;
  for (std::size_t k = 0; k < g.q_grad.size(); ++k)
    if (g.q_grad[k] != 0.0) {
      ++nonzero;
      at_pixel = k == 11u * 32 + 21;
    }

  dqn::PrioritizedReplay buf(2, 1.0);
  buf.push(dqn::Transition{});
  buf.push(dqn::Transition{});
  buf.update_priority(0, 3.0);
  buf.update_priority(1, 1.0);
  Rng rng(9);
  int first = 0;
  for (int k = 0; k < 10000; ++k) first += buf.sample(1, rng)[0] == 0;
  const double freq = first / 10000.0;

  const bool pass = greedy_bad == 0 && nonzero == 1 && at_pixel && std::abs(freq - 0.75) <= 0.02;
  return {pass, "greedy mismatches " + std::to_string(greedy_bad) + "/100, output-gradient nonzeros " +
                    std::to_string(nonzero) + (at_pixel ? " (executed pixel)" : "") + ", priority (3,1) frequency " +
                    fmt("%.4f", freq)};
}

Outcome determinism() {
  harness::ExperimentPlan plan;
  plan.variants = {{"scratch", false, false}, {"warm_start", true, false}, {"roi_prior", false, true}};
  plan.object_counts = {3};
  plan.seeds = {5};
  plan.steps = 120;
  plan.metric.window = 20;
  plan.metric.stability = {0.05, 2};
  plan.pretrain_samples = 5;
  plan.pretrain_epochs = 2;
  const fs::path a = fs::temp_directory_path() / "graspwarm_acceptance_det_a";
  const fs::path b = fs::temp_directory_path() / "graspwarm_acceptance_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  harness::run_experiment(plan, a);
  harness::run_experiment(plan, b);
  std::size_t compared = 0, differ = 0;
  for (const auto& r : harness::expand(plan)) {
    const fs::path rel = fs::relative(harness::run_dir(a, r), a);
    for (const char* f : {"curve.csv", "metrics.json"}) {
      ++compared;
      const std::string x = slurp(a / rel / f), y = slurp(b / rel / f);
      if (x.empty() || x != y) ++differ;
    }
  }
  return {differ == 0 && compared == 6,
          std::to_string(compared - differ) + "/" + std::to_string(compared) + " files bit-identical"};
}

Outcome rotation() {
  const std::size_t n = 48;
  net::Tensor img({n, n});
  const double c = (n - 1) / 2.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t q = 0; q < n; ++q)
      img.at(r, q) = std::exp(-((r - c) * (r - c) + (q - c - 4) * (q - c - 4)) / 60.0) +
                     0.25 * std::sin(0.21 * r + 0.1 * q);
  const net::Tensor back = net::rotate_map(net::rotate_map(img, std::numbers::pi / 8, net::Direction::forward),
                                           std::numbers::pi / 8, net::Direction::inverse);
  double interior = 0.0;
  for (std::size_t r = 8; r < n - 8; ++r)
    for (std::size_t q = 8; q < n - 8; ++q) interior = std::max(interior, std::abs(back.at(r, q) - img.at(r, q)));
  double quarter = 0.0;
  for (int k = 1; k <= 4; ++k) {
    net::Tensor t = img;
    for (int j = 0; j < 4; ++j) t = net::rotate_map(t, k * std::numbers::pi / 2, net::Direction::forward);
    for (std::size_t i = 0; i < t.size(); ++i) quarter = std::max(quarter, std::abs(t[i] - img[i]));
  }
  return {interior <= 0.05 && quarter <= 1e-9,
          "pi/8 round trip interior err " + fmt("%.4f", interior) + ", pi/2 multiples err " + fmt("%.1e", quarter)};
}

}  // namespace

// Optional arguments select criteria by number; none runs all of them.
int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"1 gradient correctness", gradients},
      {"2 affordance supervision invariants", affordance_invariants},
      {"3 loss comparison", loss_comparison},
      {"4 warm-start acceleration", warm_start_acceleration},
      {"5 metrics oracle equivalence", metrics_oracles},
      {"6 dqn mechanics", dqn_mechanics},
      {"7 determinism", determinism},
      {"8 rotation round trip", rotation}};
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    if (!only.empty() && !only.contains(name.substr(0, name.find(' ')))) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%s] %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
