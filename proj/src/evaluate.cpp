#include "hevrl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hevrl {

namespace {

struct EpisodeSums {
  double reward = 0.0;
  double cost = 0.0;
};

EpisodeSums run_episode(const Environment& env, const TrainerNets& nets, const Attacker& attacker,
                        const AttackContext& ctx, Rng& rng, double initial_soc_jitter,
                        std::vector<double>* vc_trace) {
  EpisodeSums sums;
  EnvState state = env.reset();
  if (initial_soc_jitter > 0.0) {
    const SocEnvelope& envelope = env.envelope();
    const double soc0 = std::clamp(
        envelope.balance + rng.uniform(-initial_soc_jitter, initial_soc_jitter), envelope.low,
        envelope.high);
    state = env.reset(soc0);
  }
  for (int t = 0; t < env.num_steps(); ++t) {
    const auto clean = env.observe(state).as_array();
    if (vc_trace) vc_trace->push_back(cost_value(clean, nets.policy, nets.q_c));
    const std::vector<double> pert = attacker.apply(clean, ctx, rng);
    const std::vector<double> action = nets.policy.mean_action(pert);
    auto [next_state, tr] = env.step(state, action[0]);
    sums.reward += tr.reward;
    sums.cost += tr.cost;
    state = next_state;
  }
  return sums;
}

}  // namespace

EvalStats evaluate_policy(const Environment& env, const TrainerNets& nets, AttackKind condition,
                          const AttackBudget& budget, const AttackConfig& cfg, int episodes,
                          std::uint64_t seed, double initial_soc_jitter) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");

  Attacker attacker;
  attacker.kind = condition;
  attacker.budget = budget;
  attacker.cfg = cfg;
  const AttackContext ctx{&nets.policy, &nets.q_r, &nets.q_c};

  if (condition == AttackKind::kAmad) {
    // threshold from one natural reference episode under the same policy
    Attacker natural;
    natural.kind = AttackKind::kNone;
    Rng ref_rng(derive_seed(seed, "eval-amad-reference"));
    std::vector<double> vc_trace;
    run_episode(env, nets, natural, ctx, ref_rng, initial_soc_jitter, &vc_trace);
    attacker.amad_vc_threshold = amad_threshold(vc_trace, cfg.xi);
  }

  EvalStats stats;
  stats.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, std::string("eval-") + attack_kind_name(condition) + "-ep" +
                                  std::to_string(e)));
    const EpisodeSums sums = run_episode(env, nets, attacker, ctx, rng, initial_soc_jitter, nullptr);
    stats.episode_rewards.push_back(sums.reward);
    stats.episode_costs.push_back(sums.cost);
  }

  auto mean_of = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return m / static_cast<double>(xs.size());
  };
  auto std_of = [&](const std::vector<double>& xs, double mean) {
    double v = 0.0;
    for (double x : xs) v += (x - mean) * (x - mean);
    return std::sqrt(v / static_cast<double>(xs.size()));
  };
  stats.reward_mean = mean_of(stats.episode_rewards);
  stats.cost_mean = mean_of(stats.episode_costs);
  stats.reward_std = std_of(stats.episode_rewards, stats.reward_mean);
  stats.cost_std = std_of(stats.episode_costs, stats.cost_mean);
  return stats;
}

}  // namespace hevrl
