#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "graspwarm/affordance.hpp"

using namespace graspwarm;
using namespace graspwarm::affordance;

namespace {

sim::ObjectSpec disc(int id, double r, double c, double radius) {
  sim::ObjectSpec o;
  o.id = id;
  o.shape = sim::Shape::disc;
  o.pose = {r, c, 0.0};
  o.size = {radius, 0, 0};
  o.height = 1.0;
  return o;
}

sim::ObjectSpec rect(int id, double r, double c, double hr, double hc) {
  sim::ObjectSpec o;
  o.id = id;
  o.shape = sim::Shape::rectangle;
  o.pose = {r, c, 0.0};
  o.size = {hr, hc, 0};
  o.height = 1.0;
  return o;
}

double total(const std::vector<double>& m) {
  double s = 0.0;
  for (double v : m) s += v;
  return s;
}

// Min distance from (v,u) to footprint pixels that touch a non-footprint 4-neighbour.
double brute_boundary(const sim::ObjectSpec& o, double v, double u, int n) {
  double best = 1e300;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (!sim::contains(o, r, c)) continue;
      const bool edge = !sim::contains(o, r - 1, c) || !sim::contains(o, r + 1, c) ||
                        !sim::contains(o, r, c - 1) || !sim::contains(o, r, c + 1);
      if (edge) best = std::min(best, std::hypot(r - v, c - u));
    }
  return best;
}

}  // namespace

TEST(Affordance, ZeroNoiseGivesAnchors) {
  const sim::Scene s = sim::generate_scene(4, {48, 48}, 3);
  Rng rng(1);
  const KeyPointLabel l = annotate_keypoints(s, 0.0, rng);
  ASSERT_EQ(l.points.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [r, c] = sim::keypoint_anchor(s.objects[i]);
    EXPECT_EQ(l.points[i].v, r);
    EXPECT_EQ(l.points[i].u, c);
  }
}

TEST(Affordance, NoisyPointStaysWithinBound) {
  const sim::Scene s{{disc(0, 30, 30, 10)}, {64, 64}, 0};
  Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    const KeyPointLabel l = annotate_keypoints(s, 0.25, rng);
    EXPECT_LE(std::hypot(l.points[0].v - 30, l.points[0].u - 30), 2.5 + 1e-12);
  }
}

TEST(Affordance, NoisyPointsStayOnFootprint) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const sim::Scene s = sim::generate_scene(4, {48, 48}, seed);
    Rng rng(seed);
    const KeyPointLabel l = annotate_keypoints(s, 0.25, rng);
    for (std::size_t i = 0; i < l.points.size(); ++i)
      EXPECT_TRUE(sim::contains(s.objects[i], std::round(l.points[i].v), std::round(l.points[i].u)));
  }
}

TEST(Affordance, NoiseOutOfRangeThrows) {
  const sim::Scene s = sim::generate_scene(1, {32, 32}, 0);
  Rng rng(0);
  EXPECT_THROW(annotate_keypoints(s, 0.6, rng), std::invalid_argument);
  EXPECT_THROW(annotate_keypoints(s, -0.1, rng), std::invalid_argument);
}

TEST(Affordance, SigmaForDiscAndRectangle) {
  const sim::Scene d{{disc(0, 30, 30, 8)}, {64, 64}, 0};
  EXPECT_NEAR(sigma_for(d, 0, {30, 30}), 8.0, 1.0);
  const sim::Scene r{{rect(0, 30, 30, 10, 4)}, {64, 64}, 0};
  EXPECT_NEAR(sigma_for(r, 0, {30, 30}), 4.0, 1.0);
}

TEST(Affordance, SigmaOffFootprintThrows) {
  const sim::Scene d{{disc(0, 30, 30, 5)}, {64, 64}, 0};
  EXPECT_THROW(sigma_for(d, 0, {2, 2}), std::invalid_argument);
  EXPECT_THROW(sigma_for(d, 7, {30, 30}), std::invalid_argument);
}

TEST(Affordance, SigmaMatchesBoundaryPixelScan) {
  Rng rng(4);
  int checked = 0;
  while (checked < 60) {
    const sim::Scene s = sim::generate_scene(2, {48, 48}, rng.next());
    const sim::ObjectSpec& o = s.objects[rng.below(s.objects.size())];
    const double v = rng.uniform(0, 47), u = rng.uniform(0, 47);
    if (!sim::contains(o, std::round(v), std::round(u))) continue;
    EXPECT_NEAR(sigma_for(s, o.id, {v, u}), std::max(brute_boundary(o, v, u, 48), kMinSigma), 1.0);
    ++checked;
  }
}

TEST(Affordance, GaussianPeakAndOneSigmaValue) {
  const auto m = gaussian_heatmap({20, 20}, 4.0, 41, 41);
  EXPECT_NEAR(m[20 * 41 + 20], 1.0 / (32.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(m[20 * 41 + 20], 9.9472e-3, 1e-7);
  EXPECT_NEAR(m[24 * 41 + 20], m[20 * 41 + 20] * std::exp(-0.5), 1e-15);
  EXPECT_THROW(gaussian_heatmap({0, 0}, 0.0, 4, 4), std::invalid_argument);
}

TEST(Affordance, GaussianMassWithFiveSigmaMargin) {
  for (double sigma : {1.0, 2.0, 3.5}) {
    const int n = 2 * static_cast<int>(std::ceil(5 * sigma)) + 3;
    const double c = (n - 1) / 2.0;
    const double mass = total(gaussian_heatmap({c, c}, sigma, n, n));
    EXPECT_GE(mass, 0.999) << sigma;
    EXPECT_LE(mass, 1.0 + 1e-6) << sigma;  // pixel-center sums overshoot 1 by ~1e-8 at sigma 1
  }
}

TEST(Affordance, GaussianDecaysMonotonically) {
  const auto m = gaussian_heatmap({10, 10}, 3.0, 21, 21);
  for (int c = 10; c < 20; ++c) EXPECT_GE(m[10 * 21 + c], m[10 * 21 + c + 1]);
  for (int r = 10; r > 0; --r) EXPECT_GE(m[r * 21 + 10], m[(r - 1) * 21 + 10]);
}

TEST(Affordance, ComposeNormalizes) {
  const auto a = gaussian_heatmap({10, 10}, 2.0, 40, 40);
  const GroundTruthMap one = compose_ground_truth({a}, 40, 40);
  EXPECT_NEAR(one.sum(), 1.0, 1e-12);
  const double s = total(a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(one.values[i], a[i] / s, 1e-15);
}

TEST(Affordance, TwoDisjointLobesShareMass) {
  const auto a = gaussian_heatmap({10, 10}, 2.0, 40, 40);
  const auto b = gaussian_heatmap({30, 30}, 2.0, 40, 40);
  const GroundTruthMap gt = compose_ground_truth({a, b}, 40, 40);
  double left = 0.0;
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 40; ++c)
      if (r + c < 40) left += gt.at(r, c);
  EXPECT_NEAR(left, 0.5, 1e-3);
}

TEST(Affordance, EmptyComposeIsZero) {
  const GroundTruthMap gt = compose_ground_truth({}, 8, 8);
  for (double v : gt.values) EXPECT_EQ(v, 0.0);
  const sim::Scene s = sim::generate_scene(0, {32, 32}, 0);
  Rng rng(0);
  EXPECT_EQ(ground_truth_from_keypoints(annotate_keypoints(s, 0.25, rng), 32, 32).sum(), 0.0);
}

TEST(Affordance, SingleObjectPeakNearCentroid) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const sim::Scene s = sim::generate_scene(1, {48, 48}, seed);
    Rng rng(seed);
    const KeyPointLabel l = annotate_keypoints(s, 0.25, rng);
    const GroundTruthMap gt = ground_truth_from_keypoints(l, 48, 48);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < gt.values.size(); ++i)
      if (gt.values[i] > gt.values[arg]) arg = i;
    const auto [ar, ac] = sim::keypoint_anchor(s.objects[0]);
    const double bound = 0.25 * sim::boundary_distance(s.objects[0], ar, ac) + 1.0;
    EXPECT_LE(std::hypot(static_cast<double>(arg / 48) - ar, static_cast<double>(arg % 48) - ac), bound);
  }
}

// The spread equals the boundary distance, so most mass already lies off the
// footprint; the shift itself may move at most 5% more.
TEST(Affordance, QuarterSigmaShiftMovesLittleMassOffConvexFootprint) {
  for (const auto& o : {disc(0, 32, 32, 10), rect(0, 32, 32, 12, 8)}) {
    const sim::Scene s{{o}, {64, 64}, 0};
    const double sigma = sigma_for(s, 0, {32, 32});
    auto off_mass = [&](KeyPoint p) {
      const GroundTruthMap gt = ground_truth_from_keypoints({{p}, {sigma}}, 64, 64);
      double off = 0.0;
      for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
          if (!sim::contains(o, r, c)) off += gt.at(r, c);
      return off;
    };
    const double centered = off_mass({32, 32});
    for (int k = 0; k < 8; ++k) {
      const double th = k * std::numbers::pi / 4;
      const KeyPoint p{32 + 0.25 * sigma * std::cos(th), 32 + 0.25 * sigma * std::sin(th)};
      EXPECT_LE(off_mass(p) - centered, 0.05) << k;
    }
  }
}

TEST(Affordance, DatasetLabelsSumToOneAndShapesAgree) {
  DatasetConfig cfg;
  cfg.samples = 50;
  cfg.workspace = {32, 32};
  cfg.seed = 12;
  const auto data = build_pretrain_dataset(cfg);
  ASSERT_EQ(data.size(), 50u);
  for (const auto& s : data) {
    EXPECT_EQ(s.label.height, s.heightmaps.height);
    EXPECT_EQ(s.label.width, s.heightmaps.width);
    EXPECT_NEAR(s.label.sum(), 1.0, 1e-6);
  }
  EXPECT_EQ(data, build_pretrain_dataset(cfg));
  cfg.samples = 0;
  EXPECT_THROW(build_pretrain_dataset(cfg), std::invalid_argument);
}

TEST(Affordance, SingleSampleDataset) {
  DatasetConfig cfg;
  cfg.samples = 1;
  cfg.workspace = {32, 32};
  const auto data = build_pretrain_dataset(cfg);
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0].label.values.size(), 32u * 32u);
}

TEST(Affordance, DatasetDirectoryRoundTrip) {
  DatasetConfig cfg;
  cfg.samples = 3;
  cfg.workspace = {32, 32};
  cfg.seed = 5;
  const auto data = build_pretrain_dataset(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "gw_dataset_rt";
  std::filesystem::remove_all(dir);
  save_dataset(dir, data);
  EXPECT_TRUE(std::filesystem::exists(dir / "sample_0002.label.json"));
  const auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].keypoints, data[i].keypoints);
    EXPECT_EQ(back[i].label, data[i].label);
    for (std::size_t j = 0; j < data[i].heightmaps.depth.size(); ++j)
      EXPECT_NEAR(back[i].heightmaps.depth[j], data[i].heightmaps.depth[j], 1e-3);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), std::runtime_error);
}
