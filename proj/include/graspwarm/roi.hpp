#pragma once

// Region-of-interest exploration prior: a simplified stand-in for
// background-subtraction guided exploration. Exploratory grasps are drawn
// only from pixels that carry an object.

#include <vector>

#include "graspwarm/qmap.hpp"

namespace graspwarm::harness {

/// Epsilon-greedy where the exploratory branch samples (x, y) uniformly from
/// nonzero-depth pixels of `depth` (falling back to the full workspace when
/// there are none) and the orientation uniformly.
inline sim::GraspAction roi_prior_action(const std::vector<double>& depth, const dqn::QOutput& q,
                                         double eps, Rng& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("roi_prior_action: eps must lie in [0, 1]");
  if (rng.uniform() >= eps) return dqn::greedy_action(q);
  std::vector<std::size_t> mask;
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (depth[i] > 0.0) mask.push_back(i);
  if (mask.empty()) return dqn::uniform_action(q.height(), q.width(), rng);
  const int alpha = static_cast<int>(rng.below(sim::kNumOrientations));
  const std::size_t p = mask[rng.below(mask.size())];
  return {static_cast<int>(p / q.width()), static_cast<int>(p % q.width()), alpha};
}

}  // namespace graspwarm::harness
