#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "graspwarm/affordance.hpp"
#include "graspwarm/dqn.hpp"
#include "graspwarm/harness.hpp"
#include "graspwarm/image_io.hpp"
#include "graspwarm/metrics.hpp"
#include "graspwarm/network.hpp"
#include "graspwarm/pretrain.hpp"
#include "graspwarm/scene.hpp"

namespace fs = std::filesystem;
using namespace graspwarm;
using nlohmann::json;

namespace {

struct SceneArgs {
  std::size_t objects = 4;
  std::uint64_t seed = 0;
  int size = 32;
  std::string out = "scene";
};

struct DatasetArgs {
  std::size_t samples = 50;
  std::size_t objects = 4;
  std::uint64_t seed = 0;
  int size = 32;
  double noise = 0.25;
  std::string out = "dataset";
};

struct PretrainArgs {
  std::string dataset;
  std::string loss = "kl";
  std::size_t epochs = 40;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string out = "model.gbn";
  std::string loss_csv;
};

struct TrainArgs {
  std::string warm_start;
  bool scratch = false;
  bool roi = false;
  bool unclipped_target = false;
  std::size_t steps = 500;
  std::size_t objects = 4;
  std::uint64_t seed = 0;
  int size = 32;
  double lr = 1e-2;
  std::size_t batch = 4;
  std::size_t target_sync = 100;
  std::size_t episode_length = 0;
  std::string out = "run";
};

struct MetricsArgs {
  std::string curve;
  std::size_t window = 50;
  double delta = 0.05;
  std::size_t k = 5;
  std::string out;
};

int cmd_scene(const SceneArgs& a) {
  const sim::Scene s = sim::generate_scene(a.objects, {a.size, a.size}, a.seed);
  const fs::path prefix(a.out);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  io::save_heightmaps(prefix, sim::render_heightmaps(s));
  std::ofstream(a.out + ".scene.json") << json(s).dump(2) << "\n";
  std::cout << "wrote " << a.out << ".{color.png,depth.png,depth.json,scene.json}\n";
  return 0;
}

int cmd_dataset(const DatasetArgs& a) {
  affordance::DatasetConfig cfg;
  cfg.samples = a.samples;
  cfg.n_objects = a.objects;
  cfg.workspace = {a.size, a.size};
  cfg.noise_frac = a.noise;
  cfg.seed = a.seed;
  affordance::save_dataset(a.out, affordance::build_pretrain_dataset(cfg));
  std::cout << "wrote " << a.samples << " samples to " << a.out << "\n";
  return 0;
}

int cmd_pretrain(const PretrainArgs& a) {
  pretrain::PretrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.sgd.lr = a.lr;
  cfg.loss = net::loss_from_string(a.loss);
  cfg.seed = a.seed;
  const auto data = affordance::load_dataset(a.dataset);
  const pretrain::PretrainResult r = pretrain::pretrain_model(data, cfg);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  net::save_checkpoint(a.out, r.params);
  const fs::path csv = a.loss_csv.empty() ? fs::path(out).replace_extension(".loss.csv") : fs::path(a.loss_csv);
  harness::write_loss_csv(csv, r.history);
  const auto means = pretrain::epoch_means(r.history);
  std::printf("pretrained on %zu samples: epoch loss %.5f -> %.5f\n", data.size(), means.front(), means.back());
  std::cout << "wrote " << a.out << " and " << csv.string() << "\n";
  return 0;
}

/// Short curves shrink k to the number of window differences available.
void fit_stability(metrics::MetricParams& mp, std::size_t steps) {
  if (mp.window == 0) throw std::invalid_argument("window length must be >= 1");
  const std::size_t windows = steps / mp.window;
  if (windows < 2)
    throw std::invalid_argument(std::to_string(steps) + " steps cover fewer than two windows of " +
                                std::to_string(mp.window));
  if (mp.stability.k > windows - 1) {
    std::cerr << "note: k reduced from " << mp.stability.k << " to " << windows - 1 << " for " << windows
              << " windows\n";
    mp.stability.k = windows - 1;
  }
}

int cmd_train(const TrainArgs& a) {
  const fs::path dir(a.out);
  dqn::EnvConfig env;
  env.n_objects = a.objects;
  env.workspace = {a.size, a.size};
  env.episode_length = a.episode_length;
  dqn::TrainConfig tc;
  tc.total_steps = a.steps;
  tc.sgd.lr = a.lr;
  tc.batch_size = a.batch;
  tc.target_sync = a.target_sync;
  tc.roi_prior = a.roi;
  tc.clip_target = !a.unclipped_target;
  tc.seed = a.seed;
  metrics::MetricParams mp;
  fit_stability(mp, a.steps);

  fs::create_directories(dir);
  const json cfg = {{"warm_start", a.warm_start.empty() ? json(nullptr) : json(a.warm_start)},
                    {"roi_prior", a.roi},
                    {"steps", a.steps},
                    {"objects", a.objects},
                    {"seed", a.seed},
                    {"workspace", a.size},
                    {"lr", a.lr},
                    {"momentum", tc.sgd.momentum},
                    {"weight_decay", tc.sgd.weight_decay},
                    {"gamma", tc.gamma},
                    {"clip_target", tc.clip_target},
                    {"eps_start", tc.eps_start},
                    {"eps_final", tc.eps_final},
                    {"batch_size", a.batch},
                    {"buffer_capacity", tc.buffer_capacity},
                    {"target_sync", a.target_sync},
                    {"episode_length", env.max_episode_steps()},
                    {"metric", {{"window", mp.window}, {"delta", mp.stability.delta}, {"k", mp.stability.k}}}};
  harness::write_text(dir / "config.json", cfg.dump(2) + "\n");

  net::NetworkParams init = a.warm_start.empty() ? dqn::warm_start_init(std::nullopt, derive_seed(a.seed, "init"))
                                                 : dqn::warm_start_init(a.warm_start);
  std::ofstream events(dir / "events.log");
  const metrics::RunMetrics m = harness::train_into(dir, env, tc, std::move(init), mp, events);
  std::cout << metrics::to_json(m).dump() << "\n";
  return 0;
}

int cmd_metrics(const MetricsArgs& a) {
  metrics::MetricParams mp{a.window, {a.delta, a.k}};
  const auto rows = harness::read_curve(a.curve);
  fit_stability(mp, rows.size());
  const std::string text = metrics::to_json(metrics::compute_run_metrics(harness::rewards_of(rows), mp)).dump(2);
  if (a.out.empty()) {
    std::cout << text << "\n";
  } else {
    harness::write_text(a.out, text + "\n");
  }
  return 0;
}

int cmd_experiment(const std::string& plan_path, const std::string& out) {
  const harness::ExperimentPlan plan = harness::load_plan(plan_path);
  std::size_t failed = 0;
  harness::run_experiment(plan, out, [&](const harness::RunRecord& r) {
    std::printf("%-12s objects=%-3zu seed=%-3llu %s", r.spec.variant.name.c_str(), r.spec.objects,
                static_cast<unsigned long long>(r.spec.seed), r.ok ? "ok" : "FAILED");
    if (r.ok) std::printf("  G_bar=%.3f Cs50=%s", r.metrics->g_bar, harness::cs_cell(r.metrics->cs[0]).c_str());
    else std::printf("  %s", r.error.c_str());
    std::printf("\n");
    std::fflush(stdout);
    failed += r.ok ? 0 : 1;
  });
  try {
    const auto rep = harness::emit_report(out);
    std::printf("report: %zu runs, %zu skipped\n", rep.runs, rep.skipped);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "report: %s\n", e.what());
  }
  return failed ? 1 : 0;
}

int cmd_report(const std::string& in) {
  const auto rep = harness::emit_report(in);
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("report: %zu runs, %zu skipped; wrote summary.csv%s and curves.svg\n", rep.runs, rep.skipped,
              rep.accel_table ? ", table_accel.csv" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale grasp learning with affordance pretraining"};
  app.require_subcommand(1);

  SceneArgs sa;
  auto* scene = app.add_subcommand("scene", "Generate one scene and write its heightmaps");
  scene->add_option("--objects", sa.objects, "Object count");
  scene->add_option("--seed", sa.seed, "Scene seed");
  scene->add_option("--size", sa.size, "Workspace side in pixels");
  scene->add_option("--out", sa.out, "Output prefix");

  DatasetArgs da;
  auto* dataset = app.add_subcommand("dataset", "Build a key-point labelled pretraining dataset");
  dataset->add_option("--samples", da.samples, "Number of images");
  dataset->add_option("--objects", da.objects, "Objects per image");
  dataset->add_option("--seed", da.seed, "Dataset seed");
  dataset->add_option("--size", da.size, "Workspace side in pixels");
  dataset->add_option("--noise", da.noise, "Key-point noise as a fraction of the boundary distance")
      ->check(CLI::Range(0.0, 0.5));
  dataset->add_option("--out", da.out, "Output directory");

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "Pretrain the affordance network");
  pre->add_option("--dataset", pa.dataset, "Dataset directory")->required();
  pre->add_option("--loss", pa.loss, "Loss: kl, mse or smooth_l1")->check(CLI::IsMember({"kl", "mse", "smooth_l1"}));
  pre->add_option("--epochs", pa.epochs, "Passes over the dataset");
  pre->add_option("--lr", pa.lr, "Learning rate");
  pre->add_option("--seed", pa.seed, "Initialization and shuffle seed");
  pre->add_option("--out", pa.out, "Checkpoint path");
  pre->add_option("--loss-csv", pa.loss_csv, "Per-step loss CSV (default: <out>.loss.csv)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run DQN grasp learning into a run directory");
  auto* warm = train->add_option("--warm-start", ta.warm_start, "Pretrained checkpoint")->check(CLI::ExistingFile);
  auto* scratch = train->add_flag("--scratch", ta.scratch, "Random initialization");
  warm->excludes(scratch);
  train->add_flag("--roi", ta.roi, "Explore only on object pixels");
  train->add_flag("--unclipped-target", ta.unclipped_target, "Do not cap TD targets at 1");
  train->add_option("--steps", ta.steps, "Grasp attempts");
  train->add_option("--objects", ta.objects, "Objects per scene");
  train->add_option("--seed", ta.seed, "Run seed");
  train->add_option("--size", ta.size, "Workspace side in pixels");
  train->add_option("--lr", ta.lr, "Learning rate");
  train->add_option("--batch", ta.batch, "Replay batch size");
  train->add_option("--target-sync", ta.target_sync, "Updates between target syncs (0 = none)");
  train->add_option("--episode-length", ta.episode_length, "Attempts per scene (0 = object count)");
  train->add_option("--out", ta.out, "Run directory");

  MetricsArgs ma;
  auto* met = app.add_subcommand("metrics", "Compute convergence metrics from a curve.csv");
  met->add_option("--curve", ma.curve, "curve.csv path")->required()->check(CLI::ExistingFile);
  met->add_option("--window", ma.window, "Window length L");
  met->add_option("--delta", ma.delta, "Stability threshold");
  met->add_option("--k", ma.k, "Consecutive stable differences");
  met->add_option("--out", ma.out, "metrics.json path (default: stdout)");

  std::string plan_path, exp_out = "results";
  auto* exp = app.add_subcommand("experiment", "Run every (variant, object count, seed) in a plan");
  exp->add_option("--plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", exp_out, "Results directory");

  std::string report_in;
  auto* rep = app.add_subcommand("report", "Write summary.csv, table_accel.csv and curves.svg");
  rep->add_option("--in", report_in, "Results directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*scene) return cmd_scene(sa);
    if (*dataset) return cmd_dataset(da);
    if (*pre) return cmd_pretrain(pa);
    if (*train) {
      if (ta.warm_start.empty() && !ta.scratch) throw std::invalid_argument("train: pass --warm-start FILE or --scratch");
      return cmd_train(ta);
    }
    if (*met) return cmd_metrics(ma);
    if (*exp) return cmd_experiment(plan_path, exp_out);
    if (*rep) return cmd_report(report_in);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
