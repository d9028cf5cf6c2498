#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "graspwarm/rng.hpp"
#include "graspwarm/scene.hpp"

namespace graspwarm::dqn {

struct Transition {
  sim::HeightmapPair s;
  sim::GraspAction a;
  double r = 0.0;
  sim::HeightmapPair s_next;
  bool done = false;
  double priority = 1.0;
};

/// Fixed-capacity FIFO replay with proportional prioritized sampling
/// (probability proportional to priority^exponent, no importance weights).
class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(std::size_t capacity, double exponent = 0.6, double min_priority = 1e-3)
      : capacity_(capacity), exponent_(exponent), min_priority_(min_priority) {
    if (capacity == 0) throw std::invalid_argument("PrioritizedReplay: capacity must be >= 1");
    slots_.reserve(capacity);
  }

  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return slots_.empty(); }
  double min_priority() const { return min_priority_; }

  /// Stores `t` with the largest priority seen so far, evicting the oldest
  /// entry when full. Returns the slot used.
  std::size_t push(Transition t) {
    t.priority = std::max(max_priority_, min_priority_);
    std::size_t slot;
    if (slots_.size() < capacity_) {
      slot = slots_.size();
      slots_.push_back(std::move(t));
    } else {
      slot = next_;
      slots_[slot] = std::move(t);
    }
    next_ = (slot + 1) % capacity_;
    return slot;
  }

  const Transition& at(std::size_t slot) const { return slots_.at(slot); }

  void update_priority(std::size_t slot, double td_error) {
    const double p = std::max(std::abs(td_error), min_priority_);
    if (!std::isfinite(p)) throw std::invalid_argument("update_priority: non-finite TD error");
    slots_.at(slot).priority = p;
    max_priority_ = std::max(max_priority_, p);
  }

  /// Up to `batch` distinct slots drawn proportionally to priority^exponent.
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const {
    if (slots_.empty()) throw std::logic_error("PrioritizedReplay::sample: buffer is empty");
    std::vector<double> w(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) w[i] = std::pow(slots_[i].priority, exponent_);
    const std::size_t n = std::min(batch, slots_.size());
    std::vector<std::size_t> picked;
    picked.reserve(n);
    while (picked.size() < n) {
      double total = 0.0;
      for (double v : w) total += v;
      double u = rng.uniform() * total;
      std::size_t chosen = w.size();
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        chosen = i;  // last positive slot absorbs rounding at the top end
        if (u < w[i]) break;
        u -= w[i];
      }
      picked.push_back(chosen);
      w[chosen] = 0.0;
    }
    return picked;
  }

 private:
  std::size_t capacity_;
  double exponent_;
  double min_priority_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace graspwarm::dqn
