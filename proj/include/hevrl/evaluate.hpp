#pragma once

#include <cstdint>
#include <vector>

#include "hevrl/attacks.hpp"
#include "hevrl/powertrain.hpp"
#include "hevrl/trainer.hpp"

namespace hevrl {

struct EvalStats {
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double cost_mean = 0.0;
  double cost_std = 0.0;
  int episodes = 0;
  std::vector<double> episode_rewards;
  std::vector<double> episode_costs;
};

// Deterministic-mean-policy evaluation under one attack condition.
// Undiscounted per-episode reward and cost sums; the AMAD threshold comes
// from one natural reference episode under the same policy. A positive
// initial_soc_jitter draws each episode's starting SOC from its seeded
// stream, matching the training-time reset distribution. Identical
// (policy, condition, seed) calls return identical statistics.
EvalStats evaluate_policy(const Environment& env, const TrainerNets& nets, AttackKind condition,
                          const AttackBudget& budget, const AttackConfig& cfg, int episodes,
                          std::uint64_t seed, double initial_soc_jitter = 0.0);

}  // namespace hevrl
