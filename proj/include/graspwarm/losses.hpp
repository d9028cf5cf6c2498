#pragma once

// Pretraining and TD losses over prediction maps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "graspwarm/tensor.hpp"

namespace graspwarm::net {

enum class LossKind { kl, mse, smooth_l1 };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kl: return "kl";
    case LossKind::mse: return "mse";
    case LossKind::smooth_l1: return "smooth_l1";
  }
  return "unknown";
}

inline LossKind loss_from_string(const std::string& s) {
  if (s == "kl") return LossKind::kl;
  if (s == "mse") return LossKind::mse;
  if (s == "smooth_l1") return LossKind::smooth_l1;
  throw std::invalid_argument("unknown loss '" + s + "' (expected kl, mse or smooth_l1)");
}

/// Loss value plus its gradient with respect to the prediction.
struct LossResult {
  double value = 0.0;
  Tensor grad;
};

inline double smooth_l1(double e) {
  const double a = std::abs(e);
  return a < 1.0 ? 0.5 * e * e : a - 0.5;
}

inline double smooth_l1_derivative(double e) {
  if (std::abs(e) < 1.0) return e;
  return e > 0.0 ? 1.0 : -1.0;
}

inline constexpr double kNormalizationTolerance = 1e-6;

/// D_KL(target || pred) = sum target * log(target / pred), with 0 log 0 = 0.
/// `grad` is d/d pred = -target / pred. For a softmax prediction the logit
/// gradient simplifies to pred - target (see kl_logit_gradient).
inline LossResult kl_div_loss(const Tensor& target, const Tensor& pred) {
  if (!target.same_shape(pred))
    throw std::invalid_argument("kl_div_loss: shape mismatch " + target.shape_string() + " vs " +
                                pred.shape_string());
  if (std::abs(target.sum() - 1.0) > kNormalizationTolerance ||
      std::abs(pred.sum() - 1.0) > kNormalizationTolerance)
    throw std::invalid_argument("kl_div_loss: inputs must each sum to 1");
  LossResult out{0.0, Tensor(pred.dims())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i], p = pred[i];
    if (t < 0.0) throw std::invalid_argument("kl_div_loss: negative target entry");
    if (!(p > 0.0)) throw std::invalid_argument("kl_div_loss: prediction must be strictly positive");
    if (t > 0.0) out.value += t * std::log(t / p);
    out.grad[i] = -t / p;
  }
  return out;
}

/// D_KL(target || softmax(logits)) through log-softmax, finite even where
/// the softmax underflows to zero.
inline double kl_div_from_logits(const Tensor& target, const Tensor& logits) {
  if (!target.same_shape(logits)) throw std::invalid_argument("kl_div_from_logits: shape mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits.values()) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  double kl = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - (logits[i] - log_z));
  return kl;
}

inline Tensor kl_logit_gradient(const Tensor& target, const Tensor& pred) {
  Tensor g(pred.dims());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = pred[i] - target[i];
  return g;
}

/// Mean squared error or mean smooth-L1 over all elements.
inline LossResult regression_loss(LossKind kind, const Tensor& target, const Tensor& pred) {
  if (kind == LossKind::kl) throw std::invalid_argument("regression_loss: use kl_div_loss for kl");
  if (!target.same_shape(pred))
    throw std::invalid_argument("regression_loss: shape mismatch " + target.shape_string() + " vs " +
                                pred.shape_string());
  const double n = static_cast<double>(pred.size());
  LossResult out{0.0, Tensor(pred.dims())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    if (kind == LossKind::mse) {
      out.value += e * e / n;
      out.grad[i] = 2.0 * e / n;
    } else {
      out.value += smooth_l1(e) / n;
      out.grad[i] = smooth_l1_derivative(e) / n;
    }
  }
  return out;
}

inline double regression_loss(LossKind kind, double target, double pred) {
  return regression_loss(kind, Tensor({1}, target), Tensor({1}, pred)).value;
}

/// Dispatch used by pretraining: target and pred are both distributions.
inline LossResult map_loss(LossKind kind, const Tensor& target, const Tensor& pred) {
  return kind == LossKind::kl ? kl_div_loss(target, pred) : regression_loss(kind, target, pred);
}

}  // namespace graspwarm::net
