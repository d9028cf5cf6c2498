#pragma once

// Bilinear image rotation about the image center with zero padding.
//
// Direction::forward by angle a samples out(p) = in(c + R(a)(p - c)), which
// brings the gripper closing axis at yaw a onto the canonical (0, 1) axis.
// Direction::inverse undoes it: out(p) = in(c + R(-a)(p - c)).

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graspwarm/tensor.hpp"

namespace graspwarm::net {

enum class Direction { forward, inverse };

/// Precomputed 4-tap bilinear sampling table for one (size, angle, direction).
class RotationPlan {
 public:
  RotationPlan() = default;
  RotationPlan(std::size_t height, std::size_t width, double angle, Direction dir)
      : height_(height), width_(width), taps_(height * width) {
    if (height != width) throw std::invalid_argument("rotation requires a square map");
    const double theta = dir == Direction::forward ? angle : -angle;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double cr = (static_cast<double>(height) - 1.0) / 2.0;
    const double cc = (static_cast<double>(width) - 1.0) / 2.0;
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t c = 0; c < width; ++c) {
        const double dr = static_cast<double>(r) - cr, dc = static_cast<double>(c) - cc;
        const double sr = cr + (dr * cs - dc * sn);
        const double sc = cc + (dr * sn + dc * cs);
        const double r0 = std::floor(sr), c0 = std::floor(sc);
        const double fr = sr - r0, fc = sc - c0;
        Taps& t = taps_[r * width + c];
        const std::array<double, 4> w{(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
        const std::array<double, 2> rr{r0, r0 + 1}, cols{c0, c0 + 1};
        for (int k = 0; k < 4; ++k) {
          const double qr = rr[k / 2], qc = cols[k % 2];
          const bool ok = qr >= 0 && qc >= 0 && qr < static_cast<double>(height) &&
                          qc < static_cast<double>(width);
          t.index[k] = ok ? static_cast<std::int64_t>(qr) * static_cast<std::int64_t>(width) +
                                static_cast<std::int64_t>(qc)
                          : -1;
          t.weight[k] = ok ? w[k] : 0.0;
        }
      }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  /// Resample a single channel stored at `in` into `out` (both height*width).
  void apply(const double* in, double* out) const {
    for (std::size_t p = 0; p < taps_.size(); ++p) {
      const Taps& t = taps_[p];
      double v = 0.0;
      for (int k = 0; k < 4; ++k)
        if (t.index[k] >= 0) v += t.weight[k] * in[t.index[k]];
      out[p] = v;
    }
  }

  /// Transpose of apply: scatters `grad_out` back onto the source grid (accumulating).
  void apply_adjoint(const double* grad_out, double* grad_in) const {
    for (std::size_t p = 0; p < taps_.size(); ++p) {
      const Taps& t = taps_[p];
      for (int k = 0; k < 4; ++k)
        if (t.index[k] >= 0) grad_in[t.index[k]] += t.weight[k] * grad_out[p];
    }
  }

  /// Value of the resampled map at one output pixel.
  double sample(const double* in, std::size_t pixel) const {
    const Taps& t = taps_[pixel];
    double v = 0.0;
    for (int k = 0; k < 4; ++k)
      if (t.index[k] >= 0) v += t.weight[k] * in[t.index[k]];
    return v;
  }

  /// Adds `g` times the sampling weights of output `pixel` onto `grad_in`.
  void sample_adjoint(double g, std::size_t pixel, double* grad_in) const {
    const Taps& t = taps_[pixel];
    for (int k = 0; k < 4; ++k)
      if (t.index[k] >= 0) grad_in[t.index[k]] += t.weight[k] * g;
  }

  /// Rotate a (H, W) or (C, H, W) tensor channel by channel.
  Tensor operator()(const Tensor& map) const {
    check(map);
    Tensor out(map.dims());
    const std::size_t plane = height_ * width_;
    for (std::size_t off = 0; off < map.size(); off += plane) apply(map.data() + off, out.data() + off);
    return out;
  }

 private:
  struct Taps {
    std::array<std::int64_t, 4> index{};
    std::array<double, 4> weight{};
  };

  void check(const Tensor& map) const {
    const auto& d = map.dims();
    if (d.size() < 2 || d[d.size() - 2] != height_ || d[d.size() - 1] != width_)
      throw std::invalid_argument("RotationPlan: map shape " + map.shape_string() +
                                  " does not match plan");
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Taps> taps_;
};

/// Rotate a square (H, W) or (C, H, W) map; throws on non-square input.
inline Tensor rotate_map(const Tensor& map, double angle, Direction dir) {
  if (map.rank() < 2) throw std::invalid_argument("rotate_map: rank must be 2 or 3");
  const std::size_t h = map.dim(map.rank() - 2), w = map.dim(map.rank() - 1);
  if (h != w) throw std::invalid_argument("rotate_map: map must be square, got " + map.shape_string());
  return RotationPlan(h, w, angle, dir)(map);
}

}  // namespace graspwarm::net
