#pragma once

// Coarse affordance supervision: key-point annotation, per-object spread,
// isotropic Gaussian heatmaps and their sum-to-one composition. Also the
// pretraining dataset builder and its on-disk layout.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspwarm/image_io.hpp"
#include "graspwarm/rng.hpp"
#include "graspwarm/scene.hpp"

namespace graspwarm::affordance {

struct KeyPoint {
  double v = 0.0;  // row
  double u = 0.0;  // column
  friend bool operator==(const KeyPoint&, const KeyPoint&) = default;
};

struct KeyPointLabel {
  std::vector<KeyPoint> points;
  std::vector<double> sigmas;
  friend bool operator==(const KeyPointLabel&, const KeyPointLabel&) = default;
};

/// H x W nonnegative map; sums to one unless the scene is empty.
struct GroundTruthMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  friend bool operator==(const GroundTruthMap&, const GroundTruthMap&) = default;
};

struct PretrainSample {
  sim::Scene scene;
  sim::HeightmapPair heightmaps;
  KeyPointLabel keypoints;
  GroundTruthMap label;
  friend bool operator==(const PretrainSample&, const PretrainSample&) = default;
};

/// Smallest spread accepted for a key point sitting on a footprint edge.
inline constexpr double kMinSigma = 0.5;

/// Distance from `point` to the outline of object `object_id`.
/// Throws if the pixel nearest to `point` is not covered by that object.
inline double sigma_for(const sim::Scene& scene, int object_id, KeyPoint point) {
  const sim::ObjectSpec* obj = sim::find_object(scene, object_id);
  if (obj == nullptr) throw std::invalid_argument("sigma_for: unknown object id " + std::to_string(object_id));
  const double r = std::round(point.v), c = std::round(point.u);
  if (r < 0 || c < 0 || r >= scene.workspace.height || c >= scene.workspace.width ||
      !sim::contains(*obj, r, c))
    throw std::invalid_argument("sigma_for: key point is not on the footprint of object " +
                                std::to_string(object_id));
  return std::max(sim::boundary_distance(*obj, point.v, point.u), kMinSigma);
}

/// One key point per object: the anchor plus a uniform offset inside a disc
/// of radius noise_frac times the anchor's distance to the outline.
inline KeyPointLabel annotate_keypoints(const sim::Scene& scene, double noise_frac, Rng& rng) {
  if (noise_frac < 0.0 || noise_frac > 0.5)
    throw std::invalid_argument("annotate_keypoints: noise_frac must lie in [0, 0.5]");
  KeyPointLabel label;
  for (const sim::ObjectSpec& o : scene.objects) {
    const auto [ar, ac] = sim::keypoint_anchor(o);
    KeyPoint p{ar, ac};
    if (noise_frac > 0.0) {
      const double reach = noise_frac * std::max(sim::boundary_distance(o, ar, ac), 0.0);
      const double radius = reach * std::sqrt(rng.uniform());
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p.v += radius * std::cos(theta);
      p.u += radius * std::sin(theta);
    }
    label.points.push_back(p);
    label.sigmas.push_back(sigma_for(scene, o.id, p));
  }
  return label;
}

/// Isotropic 2D Gaussian density centered at `point`, sampled on pixel centers.
inline std::vector<double> gaussian_heatmap(KeyPoint point, double sigma, int height, int width) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_heatmap: sigma must be > 0");
  std::vector<double> map(static_cast<std::size_t>(height) * width);
  const double norm = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const double dv = r - point.v, du = c - point.u;
      map[static_cast<std::size_t>(r) * width + c] = norm * std::exp(-(dv * dv + du * du) * inv);
    }
  return map;
}

/// Element-wise sum normalized to total one; empty input gives a zero map.
inline GroundTruthMap compose_ground_truth(const std::vector<std::vector<double>>& heatmaps,
                                           int height, int width) {
  GroundTruthMap gt{height, width, std::vector<double>(static_cast<std::size_t>(height) * width, 0.0)};
  for (const auto& h : heatmaps) {
    if (h.size() != gt.values.size()) throw std::invalid_argument("compose_ground_truth: size mismatch");
    for (std::size_t i = 0; i < h.size(); ++i) gt.values[i] += h[i];
  }
  const double total = gt.sum();
  if (total > 0.0)
    for (double& v : gt.values) v /= total;
  return gt;
}

inline GroundTruthMap ground_truth_from_keypoints(const KeyPointLabel& label, int height, int width) {
  std::vector<std::vector<double>> maps;
  maps.reserve(label.points.size());
  for (std::size_t i = 0; i < label.points.size(); ++i)
    maps.push_back(gaussian_heatmap(label.points[i], label.sigmas[i], height, width));
  return compose_ground_truth(maps, height, width);
}

/// Peak-normalized copy for display.
inline GroundTruthMap unit_max(const GroundTruthMap& gt) {
  GroundTruthMap out = gt;
  double peak = 0.0;
  for (double v : out.values) peak = std::max(peak, v);
  if (peak > 0.0)
    for (double& v : out.values) v /= peak;
  return out;
}

struct DatasetConfig {
  std::size_t samples = 50;
  std::size_t n_objects = 4;
  sim::Workspace workspace{};
  sim::SceneConfig scene{};
  double noise_frac = 0.25;
  std::uint64_t seed = 0;
};

/// Sample `index` of a dataset: deterministic in (cfg.seed, index) alone.
inline PretrainSample make_pretrain_sample(const DatasetConfig& cfg, std::size_t index) {
  const std::uint64_t s = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  PretrainSample out;
  out.scene = sim::generate_scene(cfg.n_objects, cfg.workspace, derive_seed(s, "scene"), cfg.scene);
  out.heightmaps = sim::render_heightmaps(out.scene);
  Rng rng(derive_seed(s, "annotate"));
  out.keypoints = annotate_keypoints(out.scene, cfg.noise_frac, rng);
  out.label = ground_truth_from_keypoints(out.keypoints, cfg.workspace.height, cfg.workspace.width);
  return out;
}

inline std::vector<PretrainSample> build_pretrain_dataset(const DatasetConfig& cfg) {
  if (cfg.samples < 1) throw std::invalid_argument("build_pretrain_dataset: need at least one sample");
  std::vector<PretrainSample> data;
  data.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) data.push_back(make_pretrain_sample(cfg, i));
  return data;
}

// ---------------------------------------------------------------------------
// Dataset directory: sample_%04d.{color.png, depth.png, label.json}

inline std::string sample_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04zu", index);
  return buf;
}

inline void save_dataset(const std::filesystem::path& dir, const std::vector<PretrainSample>& data) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto stem = dir / sample_stem(i);
    const auto& s = data[i];
    io::write_color_png(stem.string() + ".color.png", s.heightmaps);
    io::write_depth_png(stem.string() + ".depth.png", s.heightmaps);
    nlohmann::json pts = nlohmann::json::array();
    for (const KeyPoint& p : s.keypoints.points) pts.push_back({p.v, p.u});
    const nlohmann::json label{{"points", pts},
                               {"sigmas", s.keypoints.sigmas},
                               {"H", s.heightmaps.height},
                               {"W", s.heightmaps.width},
                               {"depth_scale", io::kDepthScale}};
    std::ofstream(stem.string() + ".label.json") << label.dump(2) << "\n";
  }
}

/// Loads every sample_NNNN in index order, regenerating dense labels from key points.
/// The scene field of loaded samples is left empty.
inline std::vector<PretrainSample> load_dataset(const std::filesystem::path& dir) {
  std::vector<PretrainSample> data;
  for (std::size_t i = 0;; ++i) {
    const auto stem = dir / sample_stem(i);
    const std::filesystem::path label_path = stem.string() + ".label.json";
    if (!std::filesystem::exists(label_path)) break;
    nlohmann::json j;
    std::ifstream(label_path) >> j;
    PretrainSample s;
    s.heightmaps = io::load_heightmaps(stem.string() + ".color.png", stem.string() + ".depth.png",
                                       j.value("depth_scale", io::kDepthScale));
    const int H = j.at("H").get<int>(), W = j.at("W").get<int>();
    if (H != s.heightmaps.height || W != s.heightmaps.width)
      throw std::runtime_error("load_dataset: " + label_path.string() + " disagrees with image size");
    for (const auto& p : j.at("points")) s.keypoints.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    s.keypoints.sigmas = j.at("sigmas").get<std::vector<double>>();
    if (s.keypoints.points.size() != s.keypoints.sigmas.size())
      throw std::runtime_error("load_dataset: points/sigmas length mismatch in " + label_path.string());
    s.label = ground_truth_from_keypoints(s.keypoints, H, W);
    data.push_back(std::move(s));
  }
  if (data.empty()) throw std::runtime_error("load_dataset: no samples in '" + dir.string() + "'");
  return data;
}

}  // namespace graspwarm::affordance
