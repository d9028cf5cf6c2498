#pragma once

// Experiment orchestration: one directory per (variant, object count, seed),
// plus the summary tables and learning-curve plot built from a result tree.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspwarm/affordance.hpp"
#include "graspwarm/dqn.hpp"
#include "graspwarm/metrics.hpp"
#include "graspwarm/network.hpp"
#include "graspwarm/pretrain.hpp"

namespace graspwarm::harness {

namespace fs = std::filesystem;
using nlohmann::json;

struct Variant {
  std::string name;
  bool warm_start = false;
  bool roi_prior = false;
};

struct ExperimentPlan {
  std::vector<Variant> variants{{"scratch", false, false}, {"warm_start", true, false}, {"roi_prior", false, true}};
  std::vector<std::size_t> object_counts{2, 4, 6, 10};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t base_seed = 0;
  std::size_t steps = 500;
  int workspace = 32;
  metrics::MetricParams metric{};
  std::size_t pretrain_samples = 50;
  std::size_t pretrain_epochs = 40;
  double pretrain_lr = 1e-3;
  double keypoint_noise = 0.25;
  double dqn_lr = 1e-2;
  std::size_t batch_size = 4;
  std::size_t target_sync = 100;
  std::size_t episode_length = 0;  // 0 -> object count
};

inline void validate(const ExperimentPlan& plan) {
  if (plan.variants.empty()) throw std::invalid_argument("plan: at least one variant is required");
  if (plan.seeds.empty()) throw std::invalid_argument("plan: at least one seed is required");
  if (plan.object_counts.empty()) throw std::invalid_argument("plan: at least one object count is required");
  for (const auto& v : plan.variants) {
    if (v.name.empty() || v.name.find_first_of("/\\") != std::string::npos)
      throw std::invalid_argument("plan: variant names must be nonempty path-safe strings");
    if (std::count_if(plan.variants.begin(), plan.variants.end(), [&](const Variant& o) { return o.name == v.name; }) > 1)
      throw std::invalid_argument("plan: duplicate variant name '" + v.name + "'");
  }
  if (plan.steps < plan.metric.window * (plan.metric.stability.k + 1))
    throw std::invalid_argument("plan: steps must cover at least k + 1 metric windows");
}

inline json to_json(const ExperimentPlan& p) {
  json variants = json::array();
  for (const auto& v : p.variants)
    variants.push_back({{"name", v.name}, {"warm_start", v.warm_start}, {"roi_prior", v.roi_prior}});
  return {{"variants", variants},
          {"object_counts", p.object_counts},
          {"seeds", p.seeds},
          {"base_seed", p.base_seed},
          {"steps", p.steps},
          {"workspace", p.workspace},
          {"metric", {{"window", p.metric.window}, {"delta", p.metric.stability.delta}, {"k", p.metric.stability.k}}},
          {"pretrain", {{"samples", p.pretrain_samples}, {"epochs", p.pretrain_epochs}, {"lr", p.pretrain_lr},
                        {"keypoint_noise", p.keypoint_noise}}},
          {"dqn", {{"lr", p.dqn_lr}, {"batch_size", p.batch_size}, {"target_sync", p.target_sync},
                   {"episode_length", p.episode_length}}}};
}

/// Missing keys keep their defaults.
inline ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan p;
  if (j.contains("variants")) {
    p.variants.clear();
    for (const auto& v : j.at("variants"))
      p.variants.push_back({v.at("name").get<std::string>(), v.value("warm_start", false), v.value("roi_prior", false)});
  }
  p.object_counts = j.value("object_counts", p.object_counts);
  p.seeds = j.value("seeds", p.seeds);
  p.base_seed = j.value("base_seed", p.base_seed);
  p.steps = j.value("steps", p.steps);
  p.workspace = j.value("workspace", p.workspace);
  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    p.metric.window = m.value("window", p.metric.window);
    p.metric.stability.delta = m.value("delta", p.metric.stability.delta);
    p.metric.stability.k = m.value("k", p.metric.stability.k);
  }
  if (j.contains("pretrain")) {
    const auto& m = j.at("pretrain");
    p.pretrain_samples = m.value("samples", p.pretrain_samples);
    p.pretrain_epochs = m.value("epochs", p.pretrain_epochs);
    p.pretrain_lr = m.value("lr", p.pretrain_lr);
    p.keypoint_noise = m.value("keypoint_noise", p.keypoint_noise);
  }
  if (j.contains("dqn")) {
    const auto& m = j.at("dqn");
    p.dqn_lr = m.value("lr", p.dqn_lr);
    p.batch_size = m.value("batch_size", p.batch_size);
    p.target_sync = m.value("target_sync", p.target_sync);
    p.episode_length = m.value("episode_length", p.episode_length);
  }
  validate(p);
  return p;
}

inline ExperimentPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan " + path.string());
  return plan_from_json(json::parse(in));
}

// ---------------------------------------------------------------------------
// Small file helpers

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

inline constexpr const char* kCurveHeader = "step,reward,epsilon,loss,td_error";

inline std::string curve_row_csv(const dqn::CurveRow& r) {
  return std::to_string(r.step) + "," + std::to_string(r.reward) + "," + fmt_double(r.epsilon) + "," +
         fmt_double(r.loss) + "," + fmt_double(r.td_error);
}

inline std::vector<dqn::CurveRow> read_curve(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kCurveHeader) throw std::runtime_error(path.string() + ": unexpected header '" + line + "'");
  std::vector<dqn::CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 5) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    dqn::CurveRow r;
    r.step = std::stoull(c[0]);
    r.reward = std::stoi(c[1]);
    r.epsilon = std::strtod(c[2].c_str(), nullptr);
    r.loss = std::strtod(c[3].c_str(), nullptr);
    r.td_error = std::strtod(c[4].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<int> rewards_of(const std::vector<dqn::CurveRow>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.reward);
  return out;
}

inline void write_loss_csv(const fs::path& path, const std::vector<pretrain::LossRecord>& history) {
  std::string s = "step,epoch,loss\n";
  for (const auto& r : history) s += std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + fmt_double(r.loss) + "\n";
  write_text(path, s);
}

// ---------------------------------------------------------------------------
// Single runs

struct RunSpec {
  Variant variant;
  std::size_t objects = 4;
  std::uint64_t seed = 0;
};

struct RunSeeds {
  std::uint64_t env = 0;    // shared by all variants at the same (count, seed)
  std::uint64_t agent = 0;  // differs per variant
};

inline RunSeeds run_seeds(std::uint64_t base, const RunSpec& r) {
  const std::uint64_t env = derive_seed(derive_seed(derive_seed(base, "env"), r.objects), r.seed);
  const std::uint64_t agent = derive_seed(derive_seed(derive_seed(base, r.variant.name), r.objects), r.seed);
  return {env, agent};
}

inline fs::path run_dir(const fs::path& root, const RunSpec& r) {
  return root / r.variant.name / ("objects_" + std::to_string(r.objects)) / ("seed_" + std::to_string(r.seed));
}

struct RunRecord {
  RunSpec spec;
  fs::path dir;
  bool ok = false;
  std::string error;
  std::optional<metrics::RunMetrics> metrics;
};

inline dqn::EnvConfig env_config(const ExperimentPlan& plan, std::size_t objects) {
  dqn::EnvConfig env;
  env.n_objects = objects;
  env.workspace = {plan.workspace, plan.workspace};
  env.episode_length = plan.episode_length;
  return env;
}

inline dqn::TrainConfig train_config(const ExperimentPlan& plan, const RunSpec& r) {
  const RunSeeds s = run_seeds(plan.base_seed, r);
  dqn::TrainConfig tc;
  tc.total_steps = plan.steps;
  tc.sgd.lr = plan.dqn_lr;
  tc.batch_size = plan.batch_size;
  tc.target_sync = plan.target_sync;
  tc.roi_prior = r.variant.roi_prior;
  tc.seed = s.agent;
  tc.env_seed = s.env;
  return tc;
}

/// Trains and writes curve.csv (row by row, so an abort leaves the partial
/// curve), model.gbn, the event log lines and metrics.json into `dir`.
inline metrics::RunMetrics train_into(const fs::path& dir, const dqn::EnvConfig& env, const dqn::TrainConfig& tc,
                                      net::NetworkParams init, const metrics::MetricParams& mp, std::ostream& events,
                                      const json& metrics_extra = json::object()) {
  std::ofstream curve(dir / "curve.csv");
  if (!curve) throw std::runtime_error("cannot write " + (dir / "curve.csv").string());
  curve << kCurveHeader << "\n";
  const dqn::TrainResult tr = dqn::run_training(env, tc, std::move(init), [&](const dqn::CurveRow& row) {
    curve << curve_row_csv(row) << "\n";
  });
  curve.close();
  for (const auto& e : tr.events) events << e << "\n";
  net::save_checkpoint((dir / "model.gbn").string(), tr.params);

  const metrics::RunMetrics m = metrics::compute_run_metrics(rewards_of(tr.curve), mp);
  json mj = metrics::to_json(m);
  for (const auto& [k, v] : metrics_extra.items()) mj[k] = v;
  write_text(dir / "metrics.json", mj.dump(2) + "\n");
  return m;
}

/// Dataset, optional pretraining, DQN training and metrics for one run.
/// Exceptions are caught and recorded; the directory keeps whatever was
/// written before the failure.
inline RunRecord run_one(const ExperimentPlan& plan, const RunSpec& spec, const fs::path& dir) {
  RunRecord rec{spec, dir};
  std::ofstream events;
  try {
    fs::create_directories(dir);
    const RunSeeds seeds = run_seeds(plan.base_seed, spec);
    const dqn::EnvConfig env = env_config(plan, spec.objects);
    const dqn::TrainConfig tc = train_config(plan, spec);

    json cfg = {{"variant", spec.variant.name},
                {"warm_start", spec.variant.warm_start},
                {"roi_prior", spec.variant.roi_prior},
                {"objects", spec.objects},
                {"seed", spec.seed},
                {"env_seed", seeds.env},
                {"agent_seed", seeds.agent},
                {"gamma", tc.gamma},
                {"clip_target", tc.clip_target},
                {"plan", to_json(plan)}};
    write_text(dir / "config.json", cfg.dump(2) + "\n");
    events.open(dir / "events.log");

    net::NetworkParams init;
    if (spec.variant.warm_start) {
      affordance::DatasetConfig dc;
      dc.samples = plan.pretrain_samples;
      dc.n_objects = spec.objects;
      dc.workspace = env.workspace;
      dc.noise_frac = plan.keypoint_noise;
      dc.seed = derive_seed(seeds.agent, "dataset");
      pretrain::PretrainConfig pc;
      pc.epochs = plan.pretrain_epochs;
      pc.sgd.lr = plan.pretrain_lr;
      pc.seed = derive_seed(seeds.agent, "pretrain");
      const pretrain::PretrainResult pr = pretrain::pretrain_model(affordance::build_pretrain_dataset(dc), pc);
      write_loss_csv(dir / "pretrain_loss.csv", pr.history);
      net::save_checkpoint((dir / "pretrained.gbn").string(), pr.params);
      events << "pretrained samples=" << dc.samples << " epochs=" << pc.epochs
             << " final_loss=" << fmt_double(pr.history.back().loss) << "\n";
      init = dqn::warm_start_init(pr.params, 0);
    } else {
      init = dqn::warm_start_init(std::nullopt, derive_seed(seeds.agent, "init"));
    }

    json extra = {{"variant", spec.variant.name}, {"objects", spec.objects}, {"seed", spec.seed}};
    const metrics::RunMetrics m = train_into(dir, env, tc, std::move(init), plan.metric, events, extra);
    rec.metrics = m;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
    if (events.is_open()) events << "error " << rec.error << "\n";
  }
  try {
    json st = {{"status", rec.ok ? "ok" : "failed"}};
    if (!rec.ok) st["error"] = rec.error;
    write_text(dir / "status.json", st.dump(2) + "\n");
  } catch (const std::exception&) {
  }
  return rec;
}

inline std::vector<RunSpec> expand(const ExperimentPlan& plan) {
  std::vector<RunSpec> runs;
  for (const auto& v : plan.variants)
    for (std::size_t n : plan.object_counts)
      for (std::uint64_t s : plan.seeds) runs.push_back({v, n, s});
  return runs;
}

using RunCallback = std::function<void(const RunRecord&)>;

inline std::vector<RunRecord> run_experiment(const ExperimentPlan& plan, const fs::path& out,
                                             const RunCallback& on_run = {}) {
  validate(plan);
  fs::create_directories(out);
  write_text(out / "plan.json", to_json(plan).dump(2) + "\n");
  std::vector<RunRecord> records;
  for (const RunSpec& spec : expand(plan)) {
    records.push_back(run_one(plan, spec, run_dir(out, spec)));
    if (on_run) on_run(records.back());
  }
  return records;
}

// ---------------------------------------------------------------------------
// Report

struct ReportRun {
  std::string variant;
  bool warm_start = false;
  bool roi_prior = false;
  std::size_t objects = 0;
  std::uint64_t seed = 0;
  std::size_t window = 0;
  metrics::RunMetrics metrics;
  std::vector<double> rates;  // window rates y(1..n)
};

/// Median over seeds with "never" sorted above every finite count.
inline std::optional<double> median_steps(std::vector<std::optional<std::size_t>> v) {
  if (v.empty()) return std::nullopt;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d;
  for (const auto& x : v) d.push_back(x ? static_cast<double>(*x) : inf);
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double m = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  if (std::isinf(m)) return std::nullopt;
  return m;
}

struct AccelCell {
  std::string variant;
  std::size_t objects = 0;
  int percent = 0;
  std::optional<double> r_baseline;
  std::optional<double> r_variant;
  std::optional<double> m;
};

/// m per (variant, objects, p) from per-cell medians against the baseline variant.
inline std::vector<AccelCell> acceleration_table(const std::vector<ReportRun>& runs, const std::string& baseline) {
  std::vector<std::string> variants;
  std::vector<std::size_t> counts;
  for (const auto& r : runs) {
    if (r.variant != baseline && std::find(variants.begin(), variants.end(), r.variant) == variants.end())
      variants.push_back(r.variant);
    if (std::find(counts.begin(), counts.end(), r.objects) == counts.end()) counts.push_back(r.objects);
  }
  std::sort(counts.begin(), counts.end());
  std::vector<AccelCell> cells;
  for (const auto& v : variants)
    for (std::size_t n : counts)
      for (std::size_t pi = 0; pi < metrics::kPercents.size(); ++pi) {
        std::vector<std::optional<std::size_t>> base, acc;
        for (const auto& r : runs) {
          if (r.objects != n) continue;
          if (r.variant == baseline) base.push_back(r.metrics.cs[pi]);
          if (r.variant == v) acc.push_back(r.metrics.cs[pi]);
        }
        if (base.empty() || acc.empty()) continue;
        AccelCell c{v, n, metrics::kPercents[pi], median_steps(base), median_steps(acc), std::nullopt};
        if (c.r_baseline && c.r_variant) c.m = metrics::acceleration_ratio(*c.r_baseline, *c.r_variant);
        cells.push_back(c);
      }
  return cells;
}

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

/// One panel per object count; per variant the mean window-rate curve over
/// seeds with a min-max band.
inline std::string render_curves_svg(const std::vector<ReportRun>& runs, const std::vector<std::string>& variant_order) {
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::vector<std::size_t> counts;
  for (const auto& r : runs)
    if (std::find(counts.begin(), counts.end(), r.objects) == counts.end()) counts.push_back(r.objects);
  std::sort(counts.begin(), counts.end());

  const double pw = 320, ph = 220, ml = 50, mt = 40, gap = 30;
  const double width = ml + counts.size() * (pw + gap) + 20;
  const double height = mt + ph + 50 + 18.0 * variant_order.size();
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    const double x0 = ml + ci * (pw + gap), y0 = mt;
    std::size_t max_steps = 0;
    for (const auto& r : runs)
      if (r.objects == counts[ci]) max_steps = std::max(max_steps, r.rates.size() * r.window);
    if (max_steps == 0) continue;
    auto px = [&](double step) { return x0 + pw * step / static_cast<double>(max_steps); };
    auto py = [&](double rate) { return y0 + ph * (1.0 - rate); };

    s << "<g class=\"panel\" data-objects=\"" << counts[ci] << "\">\n";
    s << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 - 10 << "\" text-anchor=\"middle\">" << counts[ci]
      << " objects</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double rate = t / 4.0;
      s << "<line x1=\"" << x0 << "\" x2=\"" << x0 + pw << "\" y1=\"" << py(rate) << "\" y2=\"" << py(rate)
        << "\" stroke=\"#ddd\"/>\n";
      s << "<text x=\"" << x0 - 5 << "\" y=\"" << py(rate) + 4 << "\" text-anchor=\"end\">" << rate << "</text>\n";
    }
    s << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << y0 + ph + 28 << "\" text-anchor=\"middle\">grasp attempts ("
      << max_steps << ")</text>\n";

    for (std::size_t vi = 0; vi < variant_order.size(); ++vi) {
      std::vector<const ReportRun*> group;
      for (const auto& r : runs)
        if (r.objects == counts[ci] && r.variant == variant_order[vi]) group.push_back(&r);
      if (group.empty()) continue;
      std::size_t n = group.front()->rates.size();
      for (const auto* r : group) n = std::min(n, r->rates.size());
      const std::size_t L = group.front()->window;
      std::vector<double> lo(n, 1.0), hi(n, 0.0), mean(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto* r : group) {
          lo[i] = std::min(lo[i], r->rates[i]);
          hi[i] = std::max(hi[i], r->rates[i]);
          mean[i] += r->rates[i] / static_cast<double>(group.size());
        }
      }
      const char* color = palette[vi % std::size(palette)];
      const std::string name = xml_escape(variant_order[vi]);
      s << "<polygon class=\"band\" data-variant=\"" << name << "\" fill=\"" << color
        << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < n; ++i) s << px(static_cast<double>((i + 1) * L)) << "," << py(hi[i]) << " ";
      for (std::size_t i = n; i-- > 0;) s << px(static_cast<double>((i + 1) * L)) << "," << py(lo[i]) << " ";
      s << "\"/>\n";
      s << "<polyline class=\"mean\" data-variant=\"" << name << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t i = 0; i < n; ++i)
        s << (i ? " " : "") << px(static_cast<double>((i + 1) * L)) << "," << py(mean[i]);
      s << "\"/>\n";
    }
    s << "</g>\n";
  }
  for (std::size_t vi = 0; vi < variant_order.size(); ++vi) {
    const double ly = mt + ph + 45 + 18.0 * vi;
    s << "<rect x=\"" << ml << "\" y=\"" << ly - 9 << "\" width=\"14\" height=\"10\" fill=\""
      << palette[vi % std::size(palette)] << "\"/>\n";
    s << "<text x=\"" << ml + 20 << "\" y=\"" << ly << "\">" << xml_escape(variant_order[vi])
      << " (mean over seeds, band = min to max)</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

struct ReportSummary {
  std::size_t runs = 0;
  std::size_t skipped = 0;
  bool accel_table = false;
  std::vector<std::string> warnings;
};

inline std::string cs_cell(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "never"; }

/// Reads every run directory below `root` and writes summary.csv,
/// table_accel.csv (when a baseline and another variant exist), curves.svg
/// and report.log into `root`.
inline ReportSummary emit_report(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::invalid_argument("report: no such directory " + root.string());
  std::vector<fs::path> configs;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "config.json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());

  ReportSummary out;
  std::vector<ReportRun> runs;
  std::vector<std::string> variant_order;
  std::optional<std::string> baseline;
  std::map<std::string, std::size_t> plan_rank;
  if (fs::exists(root / "plan.json")) {
    const ExperimentPlan plan = plan_from_json(read_json(root / "plan.json"));
    for (std::size_t i = 0; i < plan.variants.size(); ++i) plan_rank[plan.variants[i].name] = i;
  }

  for (const auto& cfg_path : configs) {
    const fs::path dir = cfg_path.parent_path();
    try {
      if (!fs::exists(dir / "metrics.json")) {
        out.warnings.push_back("skipped " + dir.string() + ": missing metrics.json");
        continue;
      }
      const json cfg = read_json(cfg_path);
      const json mj = read_json(dir / "metrics.json");
      ReportRun r;
      r.variant = cfg.at("variant").get<std::string>();
      r.warm_start = cfg.at("warm_start").get<bool>();
      r.roi_prior = cfg.at("roi_prior").get<bool>();
      r.objects = cfg.at("objects").get<std::size_t>();
      r.seed = cfg.at("seed").get<std::uint64_t>();
      r.window = cfg.at("plan").at("metric").at("window").get<std::size_t>();
      r.metrics = metrics::run_metrics_from_json(mj);
      r.rates = metrics::window_rates(rewards_of(read_curve(dir / "curve.csv")), r.window);
      if (std::find(variant_order.begin(), variant_order.end(), r.variant) == variant_order.end())
        variant_order.push_back(r.variant);
      if (!r.warm_start && !r.roi_prior && !baseline) baseline = r.variant;
      runs.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.warnings.push_back("skipped " + dir.string() + ": " + e.what());
    }
  }
  out.skipped = out.warnings.size();
  out.runs = runs.size();
  if (runs.empty()) throw std::runtime_error("report: no completed runs under " + root.string());

  auto rank = [&](const std::string& v) {
    auto it = plan_rank.find(v);
    return it == plan_rank.end() ? plan_rank.size() : it->second;
  };
  std::stable_sort(variant_order.begin(), variant_order.end(),
                   [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  std::stable_sort(runs.begin(), runs.end(), [&](const ReportRun& a, const ReportRun& b) {
    if (rank(a.variant) != rank(b.variant)) return rank(a.variant) < rank(b.variant);
    if (a.variant != b.variant) return a.variant < b.variant;
    if (a.objects != b.objects) return a.objects < b.objects;
    return a.seed < b.seed;
  });
  // The baseline is the first plain variant in plan order.
  baseline.reset();
  for (const auto& v : variant_order)
    for (const auto& r : runs)
      if (!baseline && r.variant == v && !r.warm_start && !r.roi_prior) baseline = v;

  std::string summary = "variant,objects,seed,G_final,G_bar,Cs50,Cs60,Cs70,Cs80,Cs90,converged\n";
  for (const auto& r : runs) {
    summary += r.variant + "," + std::to_string(r.objects) + "," + std::to_string(r.seed) + "," +
               fmt_double(r.metrics.g_final) + "," + fmt_double(r.metrics.g_bar);
    for (const auto& c : r.metrics.cs) summary += "," + cs_cell(c);
    summary += std::string(",") + (r.metrics.converged ? "true" : "false") + "\n";
  }
  write_text(root / "summary.csv", summary);

  fs::remove(root / "table_accel.csv");
  if (baseline && variant_order.size() > 1) {
    const auto cells = acceleration_table(runs, *baseline);
    std::string t = "variant,baseline,objects,m_Cs50,m_Cs60,m_Cs70,m_Cs80,m_Cs90\n";
    for (std::size_t i = 0; i < cells.size(); i += metrics::kPercents.size()) {
      t += cells[i].variant + "," + *baseline + "," + std::to_string(cells[i].objects);
      for (std::size_t k = 0; k < metrics::kPercents.size(); ++k)
        t += "," + (cells[i + k].m ? fmt_double(*cells[i + k].m) : std::string("n/a"));
      t += "\n";
    }
    write_text(root / "table_accel.csv", t);
    out.accel_table = true;
  } else {
    out.warnings.push_back("no acceleration table: needs a plain baseline and at least one other variant");
  }

  write_text(root / "curves.svg", render_curves_svg(runs, variant_order));
  std::string log;
  for (const auto& w : out.warnings) log += "warning: " + w + "\n";
  log += "runs=" + std::to_string(out.runs) + " skipped=" + std::to_string(out.skipped) + "\n";
  write_text(root / "report.log", log);
  return out;
}

}  // namespace graspwarm::harness
