#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hevrl/attacks.hpp"
#include "hevrl/policy.hpp"
#include "hevrl/powertrain.hpp"

namespace hevrl {

// On-policy batch of whole episodes. Observations are stored flat with
// stride obs_dim; both the clean states and the perturbed states the policy
// actually saw are kept.
struct RolloutBatch {
  int obs_dim = 0;
  int act_dim = 0;

  std::vector<double> obs;        // clean s
  std::vector<double> obs_pert;   // perturbed s~ fed to the policy
  std::vector<double> obs_next;   // clean s'
  std::vector<double> actions;    // squashed actions executed
  std::vector<double> pre_squash; // gaussian samples u
  std::vector<double> log_probs;  // log pi(a | s~) at sample time
  std::vector<double> rewards;
  std::vector<double> costs;
  std::vector<std::uint8_t> dones;

  std::vector<double> adv_r;  // standardized at batch close
  std::vector<double> adv_c;  // raw, so the multiplier keeps its scale
  std::vector<double> ret_r;
  std::vector<double> ret_c;

  std::vector<double> episode_rewards;  // undiscounted sums
  std::vector<double> episode_costs;

  std::size_t size() const { return rewards.size(); }
  std::span<const double> obs_at(std::size_t i) const {
    return {obs.data() + i * obs_dim, static_cast<std::size_t>(obs_dim)};
  }
  std::span<const double> obs_pert_at(std::size_t i) const {
    return {obs_pert.data() + i * obs_dim, static_cast<std::size_t>(obs_dim)};
  }
  std::span<const double> obs_next_at(std::size_t i) const {
    return {obs_next.data() + i * obs_dim, static_cast<std::size_t>(obs_dim)};
  }
  std::span<const double> action_at(std::size_t i) const {
    return {actions.data() + i * act_dim, static_cast<std::size_t>(act_dim)};
  }
  std::span<const double> pre_squash_at(std::size_t i) const {
    return {pre_squash.data() + i * act_dim, static_cast<std::size_t>(act_dim)};
  }
};

// Discounted-to-go returns and GAE advantages with bootstrap 0 at episode
// ends. values has one entry per step (the critic at the clean state).
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double gamma, double lambda,
                 std::span<double> adv_out, std::span<double> ret_out);

// Rolls whole episodes until at least min_steps transitions are collected.
// Actions are sampled from pi(a | attacker(s)); advantages use the critics on
// clean states. Reward advantages are standardized here. A positive
// initial_soc_jitter draws each episode's starting SOC uniformly from
// balance +- jitter (clamped to the envelope), so policies must regulate SOC
// by feedback instead of replaying the cycle.
RolloutBatch collect_rollout(const Environment& env, const GaussianPolicy& policy,
                             const Attacker& attacker, const AttackContext& ctx, int min_steps,
                             const Mlp& v_r, const Mlp& v_c, double gamma, double gae_lambda,
                             Rng& policy_rng, Rng& attack_rng, double initial_soc_jitter = 0.0);

}  // namespace hevrl
