#pragma once

// 16-orientation Q-maps and epsilon-greedy action selection.

#include <array>
#include <stdexcept>

#include "graspwarm/network.hpp"
#include "graspwarm/rng.hpp"
#include "graspwarm/rotate.hpp"
#include "graspwarm/scene.hpp"

namespace graspwarm::dqn {

/// C = [c_0 .. c_15]; c_i is the value-mode output for orientation i in the
/// original image frame. Shape (16, H, W).
struct QOutput {
  net::Tensor values;

  std::size_t height() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }
  double at(int alpha_index, int x, int y) const {
    return values.at(static_cast<std::size_t>(alpha_index), static_cast<std::size_t>(x),
                     static_cast<std::size_t>(y));
  }
};

/// Forward and inverse rotation tables for all 16 orientations of an N x N map.
/// Both directions use zero padding: rotated inputs see empty table, and
/// value-map corners with no canonical source read 0, below any logistic value.
struct OrientationPlans {
  std::array<net::RotationPlan, sim::kNumOrientations> to_canonical;
  std::array<net::RotationPlan, sim::kNumOrientations> to_image;

  explicit OrientationPlans(std::size_t n) {
    for (int i = 0; i < sim::kNumOrientations; ++i) {
      to_canonical[i] = net::RotationPlan(n, n, sim::orientation_angle(i), net::Direction::forward);
      to_image[i] = net::RotationPlan(n, n, sim::orientation_angle(i), net::Direction::inverse);
    }
  }
  std::size_t size() const { return to_canonical[0].height(); }
};

inline net::NetInput rotate_input(const net::NetInput& in, const net::RotationPlan& plan) {
  return {plan(in.color), plan(in.depth)};
}

inline QOutput q_forward_16(const net::NetworkParams& p, const net::NetInput& in,
                            const OrientationPlans& plans) {
  const std::size_t H = in.color.dim(1), W = in.color.dim(2);
  if (H != W) throw std::invalid_argument("q_forward_16: heightmaps must be square");
  if (plans.size() != H) throw std::invalid_argument("q_forward_16: rotation plans sized for another map");
  QOutput q{net::Tensor({static_cast<std::size_t>(sim::kNumOrientations), H, W})};
  for (int i = 0; i < sim::kNumOrientations; ++i) {
    const net::ForwardTrace t = net::forward_trace(p, rotate_input(in, plans.to_canonical[i]), net::Mode::value);
    plans.to_image[i].apply(t.output.data(), q.values.data() + static_cast<std::size_t>(i) * H * W);
  }
  return q;
}

inline QOutput q_forward_16(const net::NetworkParams& p, const sim::HeightmapPair& s) {
  if (s.height != s.width) throw std::invalid_argument("q_forward_16: heightmaps must be square");
  return q_forward_16(p, net::to_input(s), OrientationPlans(static_cast<std::size_t>(s.height)));
}

inline double max_value(const QOutput& q) {
  double m = q.values[0];
  for (double v : q.values.values()) m = std::max(m, v);
  return m;
}

/// Argmax over (orientation, row, col); ties go to the lowest linear index.
inline sim::GraspAction greedy_action(const QOutput& q) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.values.size(); ++k)
    if (q.values[k] > q.values[best]) best = k;
  const std::size_t plane = q.height() * q.width();
  return {static_cast<int>((best % plane) / q.width()), static_cast<int>(best % q.width()),
          static_cast<int>(best / plane)};
}

inline sim::GraspAction uniform_action(std::size_t height, std::size_t width, Rng& rng) {
  const int i = static_cast<int>(rng.below(sim::kNumOrientations));
  const int x = static_cast<int>(rng.below(height));
  const int y = static_cast<int>(rng.below(width));
  return {x, y, i};
}

/// Uniform random action with probability eps, otherwise the greedy one.
inline sim::GraspAction select_action(const QOutput& q, double eps, Rng& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("select_action: eps must lie in [0, 1]");
  if (rng.uniform() < eps) return uniform_action(q.height(), q.width(), rng);
  return greedy_action(q);
}

}  // namespace graspwarm::dqn
