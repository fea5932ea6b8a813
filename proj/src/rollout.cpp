#include "hevrl/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevrl {

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const std::uint8_t> dones, double gamma, double lambda,
                 std::span<double> adv_out, std::span<double> ret_out) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || adv_out.size() != n || ret_out.size() != n) {
    throw std::invalid_argument("GAE buffer size mismatch");
  }
  double next_ret = 0.0;
  double next_adv = 0.0;
  double next_value = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    next_ret = rewards[i] + gamma * not_done * next_ret;
    ret_out[i] = next_ret;
    const double delta = rewards[i] + gamma * not_done * next_value - values[i];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    adv_out[i] = next_adv;
    next_value = values[i];
  }
}

RolloutBatch collect_rollout(const Environment& env, const GaussianPolicy& policy,
                             const Attacker& attacker, const AttackContext& ctx, int min_steps,
                             const Mlp& v_r, const Mlp& v_c, double gamma, double gae_lambda,
                             Rng& policy_rng, Rng& attack_rng, double initial_soc_jitter) {
  if (min_steps < 1) throw std::invalid_argument("rollout needs at least one step");
  RolloutBatch batch;
  batch.obs_dim = policy.obs_dim();
  batch.act_dim = policy.action_dim();

  while (batch.size() < static_cast<std::size_t>(min_steps)) {
    EnvState state = env.reset();
    if (initial_soc_jitter > 0.0) {
      const SocEnvelope& envelope = env.envelope();
      const double soc0 =
          std::clamp(envelope.balance +
                         policy_rng.uniform(-initial_soc_jitter, initial_soc_jitter),
                     envelope.low, envelope.high);
      state = env.reset(soc0);
    }
    double ep_reward = 0.0;
    double ep_cost = 0.0;
    for (int t = 0; t < env.num_steps(); ++t) {
      const Observation obs = env.observe(state);
      const auto clean = obs.as_array();
      const std::vector<double> pert = attacker.apply(clean, ctx, attack_rng);
      const GaussianPolicy::Sample sample = policy.sample(pert, policy_rng);

      auto [next_state, tr] = env.step(state, sample.action[0]);

      batch.obs.insert(batch.obs.end(), clean.begin(), clean.end());
      batch.obs_pert.insert(batch.obs_pert.end(), pert.begin(), pert.end());
      const auto next_clean = tr.s_next.as_array();
      batch.obs_next.insert(batch.obs_next.end(), next_clean.begin(), next_clean.end());
      batch.actions.insert(batch.actions.end(), sample.action.begin(), sample.action.end());
      batch.pre_squash.insert(batch.pre_squash.end(), sample.pre_squash.begin(),
                              sample.pre_squash.end());
      batch.log_probs.push_back(sample.log_prob);
      batch.rewards.push_back(tr.reward);
      batch.costs.push_back(tr.cost);
      batch.dones.push_back(tr.done ? 1 : 0);

      ep_reward += tr.reward;
      ep_cost += tr.cost;
      state = next_state;
    }
    batch.episode_rewards.push_back(ep_reward);
    batch.episode_costs.push_back(ep_cost);
  }

  const std::size_t n = batch.size();
  std::vector<double> values_r(n), values_c(n);
  for (std::size_t i = 0; i < n; ++i) {
    values_r[i] = v_r.forward(batch.obs_at(i))[0];
    values_c[i] = v_c.forward(batch.obs_at(i))[0];
  }
  batch.adv_r.resize(n);
  batch.adv_c.resize(n);
  batch.ret_r.resize(n);
  batch.ret_c.resize(n);
  compute_gae(batch.rewards, values_r, batch.dones, gamma, gae_lambda, batch.adv_r, batch.ret_r);
  compute_gae(batch.costs, values_c, batch.dones, gamma, gae_lambda, batch.adv_c, batch.ret_c);

  // standardize reward advantages only
  double mean = 0.0;
  for (double a : batch.adv_r) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.adv_r) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& a : batch.adv_r) a = (a - mean) / (sd + 1e-8);

  return batch;
}

}  // namespace hevrl
