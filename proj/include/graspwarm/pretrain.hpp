#pragma once

// Supervised pretraining of the affordance network on key-point labels.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graspwarm/affordance.hpp"
#include "graspwarm/losses.hpp"
#include "graspwarm/network.hpp"
#include "graspwarm/rng.hpp"

namespace graspwarm::pretrain {

struct PretrainConfig {
  std::size_t epochs = 40;
  net::SgdConfig sgd{};
  net::LossKind loss = net::LossKind::kl;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct PretrainResult {
  net::NetworkParams params;
  std::vector<LossRecord> history;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loss of one sample and its gradient on the logits. Every loss kind reads
/// the distribution-mode output, so all three see identical targets.
inline std::pair<double, net::Gradients> sample_step_gradient(const net::NetworkParams& p,
                                                              const net::NetInput& input,
                                                              const affordance::GroundTruthMap& label,
                                                              net::LossKind kind) {
  const net::ForwardTrace t = net::forward_trace(p, input, net::Mode::distribution);
  const net::Tensor target({static_cast<std::size_t>(label.height), static_cast<std::size_t>(label.width)},
                           label.values);
  if (kind == net::LossKind::kl)
    return {net::kl_div_from_logits(target, t.logits),
            net::backward_from_logits(p, t, net::kl_logit_gradient(target, t.output))};
  const net::LossResult l = net::map_loss(kind, target, t.output);
  return {l.value, net::backward(p, t, l.grad)};
}

/// Batch-size-1 SGD over the dataset for cfg.epochs passes.
inline PretrainResult pretrain_model(const std::vector<affordance::PretrainSample>& dataset,
                                     const PretrainConfig& cfg,
                                     std::optional<net::NetworkParams> init = std::nullopt) {
  if (dataset.empty()) throw std::invalid_argument("pretrain_model: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("pretrain_model: epochs must be >= 1");
  if (!(cfg.sgd.lr > 0.0)) throw std::invalid_argument("pretrain_model: lr must be > 0");

  PretrainResult res{init ? std::move(*init) : net::init_params(derive_seed(cfg.seed, "init")), {}};
  std::vector<net::NetInput> inputs;
  inputs.reserve(dataset.size());
  for (const auto& s : dataset) inputs.push_back(net::to_input(s.heightmaps));

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle)
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t idx : order) {
      auto [loss, grads] = sample_step_gradient(res.params, inputs[idx], dataset[idx].label, cfg.loss);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("pretrain_model: non-finite loss at step " + std::to_string(step));
      net::sgd_step(res.params, grads, cfg.sgd);
      res.history.push_back({step, epoch, loss});
      ++step;
    }
  }
  return res;
}

/// Mean loss per epoch, in epoch order.
inline std::vector<double> epoch_means(const std::vector<LossRecord>& history) {
  std::vector<double> sums, counts;
  for (const auto& r : history) {
    if (r.epoch >= sums.size()) {
      sums.resize(r.epoch + 1, 0.0);
      counts.resize(r.epoch + 1, 0.0);
    }
    sums[r.epoch] += r.loss;
    counts[r.epoch] += 1.0;
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] = counts[i] > 0 ? sums[i] / counts[i] : 0.0;
  return sums;
}

/// Probability mass the distribution-mode output puts on background pixels.
inline double background_mass(const net::NetworkParams& p, const sim::HeightmapPair& hm) {
  const auto [out, trace] = net::forward_affordance(p, hm, net::Mode::distribution);
  double mass = 0.0;
  for (std::size_t i = 0; i < hm.depth.size(); ++i)
    if (hm.depth[i] == 0.0) mass += out[i];
  return mass;
}

/// Mean background mass over held-out scenes.
inline double evaluate_background_mass(const net::NetworkParams& p, const std::vector<sim::Scene>& scenes) {
  if (scenes.empty()) throw std::invalid_argument("evaluate_background_mass: no scenes");
  double total = 0.0;
  for (const auto& s : scenes) total += background_mass(p, sim::render_heightmaps(s));
  return total / static_cast<double>(scenes.size());
}

}  // namespace graspwarm::pretrain
