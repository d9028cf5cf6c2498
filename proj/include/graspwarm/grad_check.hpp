#pragma once

// Central finite-difference verification of analytic gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graspwarm/losses.hpp"
#include "graspwarm/network.hpp"

namespace graspwarm::net {

struct GradTolerance {
  double abs = 1e-4;
  double rel = 1e-3;
  double step = 1e-5;
};

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // over coordinates with magnitude above the absolute tolerance
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string worst;  // first failing coordinate, if any
  bool pass = true;
};

/// Compares `analytic` against central differences of `loss` at `params`.
/// A coordinate passes when |analytic - numeric| <= max(abs, rel * max(|analytic|, |numeric|)).
template <class LossFn>
GradCheckReport check_gradient(std::vector<double> params, LossFn&& loss,
                               std::span<const double> analytic, const GradTolerance& tol = {}) {
  GradCheckReport rep;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + tol.step;
    const double up = loss(std::span<const double>(params));
    params[i] = keep - tol.step;
    const double down = loss(std::span<const double>(params));
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * tol.step);
    const double err = std::abs(analytic[i] - numeric);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
    rep.max_abs_err = std::max(rep.max_abs_err, err);
    if (scale > tol.abs) rep.max_rel_err = std::max(rep.max_rel_err, err / scale);
    ++rep.checked;
    if (err > std::max(tol.abs, tol.rel * scale)) {
      if (rep.failures++ == 0)
        rep.worst = "coordinate " + std::to_string(i) + ": analytic " + std::to_string(analytic[i]) +
                    " numeric " + std::to_string(numeric);
      rep.pass = false;
    }
  }
  return rep;
}

/// One gradient-check case for the full network.
struct GradCheckSample {
  NetInput input;
  Tensor target;  // (H, W)
  Mode mode = Mode::distribution;
};

inline std::vector<double> flatten(const TensorSet& set) {
  std::vector<double> flat;
  for (const Tensor& t : set) flat.insert(flat.end(), t.values().begin(), t.values().end());
  return flat;
}

inline void unflatten(std::span<const double> flat, TensorSet& set) {
  std::size_t k = 0;
  for (Tensor& t : set)
    for (double& v : t.values()) v = flat[k++];
}

/// Loss of the network output against the sample target.
inline double network_loss(const NetworkParams& p, const GradCheckSample& s, LossKind kind) {
  const ForwardTrace t = forward_trace(p, s.input, s.mode);
  return map_loss(kind, s.target, t.output).value;
}

inline Gradients network_loss_gradient(const NetworkParams& p, const GradCheckSample& s, LossKind kind) {
  const ForwardTrace t = forward_trace(p, s.input, s.mode);
  if (kind == LossKind::kl && s.mode == Mode::distribution)
    return backward_from_logits(p, t, kl_logit_gradient(s.target, t.output));
  return backward(p, t, map_loss(kind, s.target, t.output).grad);
}

/// Checks every network parameter against central finite differences.
inline GradCheckReport grad_check(const NetworkParams& params, const GradCheckSample& sample,
                                  LossKind kind, const GradTolerance& tol = {}) {
  if (sample.input.color.rank() != 3 || sample.input.color.dim(1) > 16 || sample.input.color.dim(2) > 16)
    throw std::invalid_argument("grad_check: input must be at most 16x16");
  const std::vector<double> analytic = flatten(network_loss_gradient(params, sample, kind));
  NetworkParams probe = params;
  auto loss = [&](std::span<const double> flat) {
    unflatten(flat, probe.weights);
    return network_loss(probe, sample, kind);
  };
  return check_gradient(flatten(params.weights), loss, analytic, tol);
}

}  // namespace graspwarm::net
