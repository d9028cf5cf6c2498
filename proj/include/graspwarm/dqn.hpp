#pragma once

// DQN grasp learning over the 16-orientation Q-map, optionally warm started
// from a pretrained affordance checkpoint.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graspwarm/losses.hpp"
#include "graspwarm/network.hpp"
#include "graspwarm/qmap.hpp"
#include "graspwarm/replay.hpp"
#include "graspwarm/roi.hpp"
#include "graspwarm/scene.hpp"

namespace graspwarm::dqn {

/// Copies pretrained weights (momentum zeroed); without a checkpoint returns
/// a fresh seeded initialization.
inline net::NetworkParams warm_start_init(const std::optional<net::NetworkParams>& pretrained,
                                          std::uint64_t seed) {
  if (!pretrained) return net::init_params(seed);
  net::NetworkParams p{pretrained->weights, net::zeros_like_params()};
  for (std::size_t i = 0; i < net::kParamCount; ++i)
    if (p.weights[i].dims() != net::param_shape(i))
      throw std::invalid_argument("warm_start_init: tensor " + std::string(net::kParamNames[i]) +
                                  " has shape " + p.weights[i].shape_string());
  return p;
}

inline net::NetworkParams warm_start_init(const std::string& checkpoint_path) {
  return warm_start_init(net::load_checkpoint(checkpoint_path), 0);
}

struct TdConfig {
  double gamma = 0.9;
  net::SgdConfig sgd{};
  bool clip_target = true;  // cap y at 1, the upper end of the logistic output
};

/// Per-transition pieces of a TD update.
struct TransitionGradient {
  double target = 0.0;
  double prediction = 0.0;
  double td_error = 0.0;   // |target - prediction|
  double loss = 0.0;       // smooth L1
  net::Tensor q_grad;      // d loss / d c_i on the image-frame slice (H, W)
  net::Gradients grads;
};

/// y = r if done else r + gamma * max C(s_next; target params), optionally
/// capped at 1. Without the cap a success bootstraps to about 1 + gamma, which
/// the logistic output cannot reach, and every logit drifts upward.
inline double td_target(const Transition& t, double next_max, double gamma, bool clip = false) {
  const double y = t.done ? t.r : t.r + gamma * next_max;
  if (!std::isfinite(y)) throw std::runtime_error("td_update: non-finite target");
  return clip ? std::min(y, 1.0) : y;
}

/// Smooth-L1 loss at the single executed (orientation, pixel) and its
/// parameter gradient. Only that orientation is evaluated, and the output
/// gradient is nonzero at that pixel alone.
inline TransitionGradient transition_gradient(const net::NetworkParams& p, const Transition& t,
                                              double target, const OrientationPlans& plans) {
  const int i = t.a.alpha_index;
  const std::size_t H = static_cast<std::size_t>(t.s.height), W = static_cast<std::size_t>(t.s.width);
  const std::size_t pixel = static_cast<std::size_t>(t.a.x) * W + static_cast<std::size_t>(t.a.y);
  const net::ForwardTrace trace =
      net::forward_trace(p, rotate_input(net::to_input(t.s), plans.to_canonical[i]), net::Mode::value);

  TransitionGradient out;
  out.target = target;
  out.prediction = plans.to_image[i].sample(trace.output.data(), pixel);
  const double e = out.prediction - target;
  out.td_error = std::abs(e);
  out.loss = net::smooth_l1(e);
  out.q_grad = net::Tensor({H, W});
  out.q_grad[pixel] = net::smooth_l1_derivative(e);

  net::Tensor grad_rotated(trace.output.dims());
  plans.to_image[i].apply_adjoint(out.q_grad.data(), grad_rotated.data());
  out.grads = net::backward(p, trace, grad_rotated);
  return out;
}

struct TdResult {
  std::vector<double> td_errors;
  double loss = 0.0;  // batch mean
};

/// One SGD step on the batch-averaged gradient. `next_max[k]` is
/// max C(s_next; target params) for batch[k] (ignored for done transitions).
inline TdResult td_update_with_targets(net::NetworkParams& p, std::span<const Transition* const> batch,
                                       std::span<const double> next_max, const TdConfig& cfg,
                                       const OrientationPlans& plans) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
  TdResult res;
  net::Gradients total = net::zeros_like_params();
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double y = td_target(*batch[k], next_max[k], cfg.gamma, cfg.clip_target);
    const TransitionGradient g = transition_gradient(p, *batch[k], y, plans);
    net::accumulate(total, g.grads, scale);
    res.td_errors.push_back(g.td_error);
    res.loss += g.loss * scale;
  }
  net::sgd_step(p, total, cfg.sgd);
  return res;
}

inline double next_state_max(const net::NetworkParams& target, const Transition& t,
                             const OrientationPlans& plans) {
  if (t.done) return 0.0;
  return max_value(q_forward_16(target, net::to_input(t.s_next), plans));
}

/// Pure form: returns updated params and per-transition |TD error|.
inline std::pair<net::NetworkParams, TdResult> td_update(const net::NetworkParams& params,
                                                          const net::NetworkParams& target_params,
                                                          std::span<const Transition* const> batch,
                                                          const TdConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
  const OrientationPlans plans(static_cast<std::size_t>(batch.front()->s.height));
  std::vector<double> next;
  for (const Transition* t : batch) next.push_back(next_state_max(target_params, *t, plans));
  net::NetworkParams out = params;
  TdResult r = td_update_with_targets(out, batch, next, cfg, plans);
  return {std::move(out), std::move(r)};
}

// ---------------------------------------------------------------------------
// Training loop

struct EnvConfig {
  std::size_t n_objects = 4;
  sim::Workspace workspace{};
  sim::SceneConfig scene{};
  sim::GripperConfig gripper{};
  std::size_t episode_length = 0;  // 0 -> n_objects

  std::size_t max_episode_steps() const { return episode_length ? episode_length : n_objects; }
};

struct TrainConfig {
  std::size_t total_steps = 500;
  double eps_start = 0.5;
  double eps_final = 0.001;
  double eps_decay_fraction = 0.8;  // eps reaches eps_final at this fraction of total_steps
  double gamma = 0.9;
  bool clip_target = true;
  std::size_t buffer_capacity = 1000;
  std::size_t batch_size = 4;
  std::size_t target_sync = 100;  // updates between target syncs; 0 = no target network
  double priority_exponent = 0.6;
  double min_priority = 1e-3;
  net::SgdConfig sgd{1e-2, 0.9, 2e-5};
  bool roi_prior = false;
  std::uint64_t seed = 0;                   // agent stream: exploration and replay sampling
  std::optional<std::uint64_t> env_seed{};  // scene stream; defaults to `seed`
};

/// Exponential decay from eps_start to eps_final, flat afterwards.
inline double epsilon_at(const TrainConfig& cfg, std::size_t step) {
  const double horizon = cfg.eps_decay_fraction * static_cast<double>(cfg.total_steps);
  if (horizon <= 0.0 || static_cast<double>(step) >= horizon || cfg.eps_start <= 0.0) return cfg.eps_final;
  const double frac = static_cast<double>(step) / horizon;
  return cfg.eps_start * std::pow(cfg.eps_final / cfg.eps_start, frac);
}

inline void validate(const TrainConfig& cfg) {
  if (!(0.0 <= cfg.eps_final && cfg.eps_final <= cfg.eps_start && cfg.eps_start <= 1.0))
    throw std::invalid_argument("TrainConfig: need 0 <= eps_final <= eps_start <= 1");
  if (!(0.0 <= cfg.gamma && cfg.gamma <= 1.0)) throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1]");
  if (cfg.batch_size == 0 || cfg.buffer_capacity == 0)
    throw std::invalid_argument("TrainConfig: batch size and buffer capacity must be >= 1");
}

struct CurveRow {
  std::size_t step = 0;
  int reward = 0;
  double epsilon = 0.0;
  double loss = std::numeric_limits<double>::quiet_NaN();      // NaN before updates start
  double td_error = std::numeric_limits<double>::quiet_NaN();  // mean |TD| of the batch
  sim::GraspAction action{};
};

struct TrainResult {
  net::NetworkParams params;
  std::vector<CurveRow> curve;
  std::vector<std::string> events;
};

using StepCallback = std::function<void(const CurveRow&)>;

/// Runs cfg.total_steps grasp attempts. Scenes are refreshed when empty or
/// after the episode length; one TD update per step once the buffer holds a
/// full batch.
inline TrainResult run_training(const EnvConfig& env, const TrainConfig& cfg, net::NetworkParams params,
                                const StepCallback& on_step = {}) {
  validate(cfg);
  if (env.workspace.height != env.workspace.width)
    throw std::invalid_argument("run_training: workspace must be square");
  TrainResult res;
  res.params = std::move(params);
  net::NetworkParams target = res.params;
  const bool use_target_net = cfg.target_sync > 0;

  const OrientationPlans plans(static_cast<std::size_t>(env.workspace.height));
  Rng env_rng(derive_seed(cfg.env_seed.value_or(cfg.seed), "env"));
  Rng agent_rng(derive_seed(cfg.seed, "agent"));
  PrioritizedReplay buffer(cfg.buffer_capacity, cfg.priority_exponent, cfg.min_priority);
  // max C(s_next; target) per slot; valid until the slot is overwritten or the target changes
  std::vector<std::optional<double>> next_cache(cfg.buffer_capacity);

  const std::size_t T = env.max_episode_steps();
  sim::Scene scene;
  std::size_t episode_step = 0;
  bool need_scene = true;
  std::size_t updates = 0;

  res.events.push_back("start steps=" + std::to_string(cfg.total_steps) +
                       " objects=" + std::to_string(env.n_objects) + " seed=" + std::to_string(cfg.seed));
  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    if (need_scene) {
      const std::uint64_t scene_seed = env_rng.next();
      scene = sim::generate_scene(env.n_objects, env.workspace, scene_seed, env.scene);
      episode_step = 0;
      need_scene = false;
      res.events.push_back("step " + std::to_string(step) + " new_scene seed=" + std::to_string(scene_seed));
    }
    const sim::HeightmapPair s = sim::render_heightmaps(scene);
    const double eps = epsilon_at(cfg, step);
    const QOutput q = q_forward_16(res.params, net::to_input(s), plans);
    const sim::GraspAction a = cfg.roi_prior ? harness::roi_prior_action(s.depth, q, eps, agent_rng)
                                             : select_action(q, eps, agent_rng);
    auto [next_scene, outcome] = sim::execute_grasp(scene, a, env.gripper);
    ++episode_step;
    const bool done = sim::is_terminal(next_scene, episode_step, T);

    Transition tr{s, a, static_cast<double>(outcome.reward), sim::render_heightmaps(next_scene), done, 1.0};
    const std::size_t slot = buffer.push(std::move(tr));
    next_cache[slot].reset();
    scene = std::move(next_scene);
    need_scene = done;

    CurveRow row{step, outcome.reward, eps};
    row.action = a;
    if (buffer.size() >= cfg.batch_size) {
      const auto slots = buffer.sample(cfg.batch_size, agent_rng);
      std::vector<const Transition*> batch;
      std::vector<double> next_max;
      for (std::size_t sl : slots) {
        const Transition& t = buffer.at(sl);
        batch.push_back(&t);
        if (!use_target_net) {
          next_max.push_back(next_state_max(res.params, t, plans));
        } else {
          if (!next_cache[sl]) next_cache[sl] = next_state_max(target, t, plans);
          next_max.push_back(*next_cache[sl]);
        }
      }
      const TdResult td = td_update_with_targets(res.params, batch, next_max, {cfg.gamma, cfg.sgd, cfg.clip_target}, plans);
      double mean_td = 0.0;
      for (std::size_t k = 0; k < slots.size(); ++k) {
        buffer.update_priority(slots[k], td.td_errors[k]);
        mean_td += td.td_errors[k] / static_cast<double>(slots.size());
      }
      row.loss = td.loss;
      row.td_error = mean_td;
      ++updates;
      if (use_target_net && updates % cfg.target_sync == 0) {
        target = res.params;
        for (auto& c : next_cache) c.reset();
        res.events.push_back("step " + std::to_string(step) + " target_sync updates=" + std::to_string(updates));
      }
    }
    if (outcome.success)
      res.events.push_back("step " + std::to_string(step) + " grasp_success object=" +
                           std::to_string(*outcome.removed_id));
    res.curve.push_back(row);
    if (on_step) on_step(row);
  }
  res.events.push_back("end updates=" + std::to_string(updates));
  return res;
}

}  // namespace graspwarm::dqn
