#include "hevrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevrl {

namespace {
constexpr std::size_t kChunk = 256;       // samples per tape pass
constexpr double kMaxCriticLoss = 1e6;    // divergence guard
constexpr double kRatioExpClamp = 30.0;   // keeps exp(log-ratio) finite
}  // namespace

const std::vector<Method>& method_registry() {
  static const std::vector<Method> registry = {
      Method::kPpolVanilla, Method::kPpolRandom, Method::kSaPpol,    Method::kSaPpolMc,
      Method::kSaPpolMr,    Method::kAdvPpolMc,  Method::kAdvPpolMr,
  };
  return registry;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kPpolVanilla: return "ppol-vanilla";
    case Method::kPpolRandom: return "ppol-random";
    case Method::kSaPpol: return "sa-ppol";
    case Method::kSaPpolMc: return "sa-ppol-mc";
    case Method::kSaPpolMr: return "sa-ppol-mr";
    case Method::kAdvPpolMc: return "adv-ppol-mc";
    case Method::kAdvPpolMr: return "adv-ppol-mr";
  }
  return "?";
}

const char* method_display_name(Method m) {
  switch (m) {
    case Method::kPpolVanilla: return "PPOL-vanilla";
    case Method::kPpolRandom: return "PPOL-random";
    case Method::kSaPpol: return "SA-PPOL";
    case Method::kSaPpolMc: return "SA-PPOL(MC)";
    case Method::kSaPpolMr: return "SA-PPOL(MR)";
    case Method::kAdvPpolMc: return "ADV-PPOL(MC)";
    case Method::kAdvPpolMr: return "ADV-PPOL(MR)";
  }
  return "?";
}

Method method_from_name(std::string_view name) {
  for (Method m : method_registry()) {
    if (name == method_name(m)) return m;
  }
  throw std::invalid_argument("unknown method: " + std::string(name));
}

LagrangianState lambda_update(LagrangianState lag, double episode_cost_mean) {
  lag.lambda = std::max(0.0, lag.lambda + lag.lambda_lr * (episode_cost_mean - lag.kappa));
  return lag;
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda in [0,1]");
  if (!(clip_ratio > 0.0)) throw std::invalid_argument("clip_ratio must be > 0");
  if (epochs < 1 || steps_per_epoch < 1 || update_iters < 1 || critic_iters < 1) {
    throw std::invalid_argument("training loop sizes must be >= 1");
  }
  if (!(polyak_tau > 0.0 && polyak_tau <= 1.0)) throw std::invalid_argument("polyak_tau in (0,1]");
  if (kappa < 0.0 || lambda_lr < 0.0 || lambda_init < 0.0) {
    throw std::invalid_argument("lagrangian settings must be >= 0");
  }
  if (!(initial_action > 0.0 && initial_action < 1.0)) {
    throw std::invalid_argument("initial_action must be in (0,1)");
  }
  if (initial_soc_jitter < 0.0) throw std::invalid_argument("initial_soc_jitter must be >= 0");
}

double epsilon_schedule(int epoch, int total_epochs, double ramp_fraction, double eps_final) {
  if (epoch < 1) throw std::invalid_argument("epoch index starts at 1");
  const double ramp_epochs = ramp_fraction * total_epochs;
  if (ramp_epochs <= 0.0) return eps_final;
  return eps_final * std::min(1.0, static_cast<double>(epoch) / ramp_epochs);
}

namespace {

// builds sum over one chunk of the actor objective on the tape; returns the
// node id of the chunk sum
struct ActorChunkBuilder {
  const RolloutBatch& batch;
  const GaussianPolicy& policy;
  const LagrangianState& lag;
  double clip_ratio;
  ObsSource source;

  int build(Tape& tape, const MlpVars& mean_vars, int log_std_id, std::size_t begin,
            std::size_t end) const {
    const int act_dim = policy.action_dim();
    const int inv_sigma = tape.exp_(tape.neg(log_std_id));
    int total = tape.constant(0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto obs = source == ObsSource::kClean ? batch.obs_at(i) : batch.obs_pert_at(i);
      const int mu = forward_on_tape(tape, policy.mean, mean_vars, tape.leaf(obs, false));
      const int u = tape.leaf(batch.pre_squash_at(i), false);
      const int z = tape.mul(tape.sub(u, mu), inv_sigma);
      // gaussian log-density of the stored pre-squash sample
      int logp = tape.add_const(tape.scale(tape.sum(tape.mul(z, z)), -0.5),
                                -0.5 * 1.8378770664093454836 * act_dim);
      logp = tape.sub(logp, tape.sum(log_std_id));

      // stored log-prob includes the squash correction; undo it so the
      // difference of gaussian log-densities forms the ratio
      double logp_old_gauss = batch.log_probs[i];
      for (double uv : batch.pre_squash_at(i)) logp_old_gauss += log_squash_jacobian(uv);

      const int ratio =
          tape.exp_(tape.clamp_(tape.add_const(logp, -logp_old_gauss), -kRatioExpClamp,
                                kRatioExpClamp));
      const int surr_r = tape.minimum(
          tape.scale(ratio, batch.adv_r[i]),
          tape.scale(tape.clamp_(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio), batch.adv_r[i]));
      const int surr_c = tape.scale(ratio, batch.adv_c[i]);
      total = tape.add(total, tape.add(tape.neg(surr_r), tape.scale(surr_c, lag.lambda)));
    }
    return total;
  }
};

}  // namespace

double ppo_lagrangian_loss(const RolloutBatch& batch, const GaussianPolicy& policy,
                           const LagrangianState& lag, double clip_ratio, ObsSource source,
                           bool scale_by_lambda, std::vector<double>* mean_grad,
                           std::vector<double>* log_std_grad) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const double scale =
      1.0 / (static_cast<double>(batch.size()) * (scale_by_lambda ? 1.0 + lag.lambda : 1.0));
  const ActorChunkBuilder builder{batch, policy, lag, clip_ratio, source};

  double loss = 0.0;
  Tape tape;
  for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
    const std::size_t end = std::min(batch.size(), begin + kChunk);
    tape.reset();
    const bool want_grads = mean_grad != nullptr || log_std_grad != nullptr;
    const MlpVars mean_vars = bind(tape, policy.mean, want_grads);
    const int log_std_id = tape.leaf(policy.log_std, want_grads);
    const int chunk = tape.scale(builder.build(tape, mean_vars, log_std_id, begin, end), scale);
    loss += tape.value(chunk)[0];
    if (want_grads) {
      tape.backward(chunk);
      if (mean_grad) accumulate_param_grads(tape, policy.mean, mean_vars, *mean_grad);
      if (log_std_grad) {
        auto g = tape.grad(log_std_id);
        for (std::size_t i = 0; i < g.size(); ++i) (*log_std_grad)[i] += g[i];
      }
    }
  }
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite actor loss");
  return loss;
}

double sa_kl_regularizer(const RolloutBatch& batch, const GaussianPolicy& policy,
                         std::vector<double>* mean_grad, std::vector<double>* log_std_grad) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const int act_dim = policy.action_dim();
  const double scale = 1.0 / static_cast<double>(batch.size());

  double total = 0.0;
  Tape tape;
  for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
    const std::size_t end = std::min(batch.size(), begin + kChunk);
    tape.reset();
    const bool want_grads = mean_grad != nullptr || log_std_grad != nullptr;
    const MlpVars mean_vars = bind(tape, policy.mean, want_grads);
    const int log_std_id = tape.leaf(policy.log_std, want_grads);
    // variance of the perturbed-state branch (theta side)
    const int inv_two_var_b = tape.scale(tape.exp_(tape.scale(log_std_id, -2.0)), 0.5);

    int chunk = tape.constant(0.0);
    for (std::size_t i = begin; i < end; ++i) {
      // clean-state distribution is the stop-gradient target
      const std::vector<double> mu_a = policy.mean.forward(batch.obs_at(i));
      std::vector<double> var_a(static_cast<std::size_t>(act_dim));
      double log_sigma_a_sum = 0.0;
      for (int d = 0; d < act_dim; ++d) {
        var_a[static_cast<std::size_t>(d)] = std::exp(2.0 * policy.log_std[static_cast<std::size_t>(d)]);
        log_sigma_a_sum += policy.log_std[static_cast<std::size_t>(d)];
      }
      const int mu_b =
          forward_on_tape(tape, policy.mean, mean_vars, tape.leaf(batch.obs_pert_at(i), false));
      const int diff = tape.sub(tape.leaf(mu_a, false), mu_b);
      const int quad =
          tape.sum(tape.mul(tape.add(tape.mul(diff, diff), tape.leaf(var_a, false)), inv_two_var_b));
      const int kl = tape.add(tape.add_const(tape.sum(log_std_id), -log_sigma_a_sum - 0.5 * act_dim),
                              quad);
      chunk = tape.add(chunk, kl);
    }
    chunk = tape.scale(chunk, scale);
    total += tape.value(chunk)[0];
    if (want_grads) {
      tape.backward(chunk);
      if (mean_grad) accumulate_param_grads(tape, policy.mean, mean_vars, *mean_grad);
      if (log_std_grad) {
        auto g = tape.grad(log_std_id);
        for (std::size_t i = 0; i < g.size(); ++i) (*log_std_grad)[i] += g[i];
      }
    }
  }
  if (!std::isfinite(total)) throw std::runtime_error("non-finite KL regularizer");
  return total;
}

namespace {

// one full-batch regression pass toward fixed targets; returns the mse
double critic_regression_step(Mlp& net, const RolloutBatch& batch,
                              const std::vector<double>& inputs, int input_dim,
                              const std::vector<double>& targets, AdamState& opt, double lr) {
  std::vector<double> grad(net.params().size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Tape tape;
  for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
    const std::size_t end = std::min(batch.size(), begin + kChunk);
    tape.reset();
    const MlpVars vars = bind(tape, net, true);
    int chunk = tape.constant(0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const std::span<const double> x(inputs.data() + i * input_dim,
                                      static_cast<std::size_t>(input_dim));
      const int y = forward_on_tape(tape, net, vars, tape.leaf(x, false));
      const int d = tape.add_const(y, -targets[i]);
      chunk = tape.add(chunk, tape.mul(d, d));
    }
    chunk = tape.scale(chunk, scale);
    loss += tape.value(chunk)[0];
    tape.backward(chunk);
    accumulate_param_grads(tape, net, vars, grad);
  }
  adam_step(net.params(), grad, opt, lr);
  return loss;
}

void check_critic_loss(double loss, const char* what) {
  if (!std::isfinite(loss) || loss > kMaxCriticLoss) {
    throw std::runtime_error(std::string(what) + " regression diverged (loss " +
                             std::to_string(loss) + ")");
  }
}

}  // namespace

CriticLosses update_q_critics(const RolloutBatch& batch, const GaussianPolicy& policy, Mlp& q_r,
                              Mlp& q_c, Mlp& q_r_target, Mlp& q_c_target, AdamState& opt_r,
                              AdamState& opt_c, double lr, double gamma, double tau, int iters) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const std::size_t n = batch.size();
  const int obs_dim = batch.obs_dim;
  const int act_dim = batch.act_dim;
  const int in_dim = obs_dim + act_dim;

  // (s, a) inputs and TD(0) targets from the frozen target critics
  std::vector<double> inputs(n * static_cast<std::size_t>(in_dim));
  std::vector<double> targets_r(n), targets_c(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = inputs.data() + i * in_dim;
    const auto s = batch.obs_at(i);
    const auto a = batch.action_at(i);
    std::copy(s.begin(), s.end(), row);
    std::copy(a.begin(), a.end(), row + obs_dim);

    if (batch.dones[i]) {
      targets_r[i] = batch.rewards[i];
      targets_c[i] = batch.costs[i];
    } else {
      const auto s2 = batch.obs_next_at(i);
      const std::vector<double> a2 = policy.mean_action(s2);
      std::vector<double> x2(s2.begin(), s2.end());
      x2.insert(x2.end(), a2.begin(), a2.end());
      targets_r[i] = batch.rewards[i] + gamma * q_r_target.forward(x2)[0];
      targets_c[i] = batch.costs[i] + gamma * q_c_target.forward(x2)[0];
    }
  }

  CriticLosses losses;
  for (int it = 0; it < iters; ++it) {
    losses.loss_r = critic_regression_step(q_r, batch, inputs, in_dim, targets_r, opt_r, lr);
    losses.loss_c = critic_regression_step(q_c, batch, inputs, in_dim, targets_c, opt_c, lr);
  }
  check_critic_loss(losses.loss_r, "reward Q critic");
  check_critic_loss(losses.loss_c, "cost Q critic");

  polyak_update(q_r_target.params(), q_r.params(), tau);
  polyak_update(q_c_target.params(), q_c.params(), tau);
  return losses;
}

CriticLosses update_value_critics(const RolloutBatch& batch, Mlp& v_r, Mlp& v_c, AdamState& opt_r,
                                  AdamState& opt_c, double lr, int iters) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  CriticLosses losses;
  for (int it = 0; it < iters; ++it) {
    losses.loss_r = critic_regression_step(v_r, batch, batch.obs, batch.obs_dim, batch.ret_r,
                                           opt_r, lr);
    losses.loss_c = critic_regression_step(v_c, batch, batch.obs, batch.obs_dim, batch.ret_c,
                                           opt_c, lr);
  }
  check_critic_loss(losses.loss_r, "reward value critic");
  check_critic_loss(losses.loss_c, "cost value critic");
  return losses;
}

PpolTrainer::PpolTrainer(Environment env, Method method, TrainConfig cfg, AttackBudget budget,
                         AttackConfig attack_cfg, NetworkShape shape, std::uint64_t seed)
    : env_(std::move(env)), method_(method), cfg_(cfg), budget_(budget), attack_cfg_(attack_cfg) {
  cfg_.validate();
  budget_.validate();
  attack_cfg_.validate();

  std::vector<int> policy_sizes = {2};
  policy_sizes.insert(policy_sizes.end(), shape.hidden.begin(), shape.hidden.end());
  policy_sizes.push_back(1);
  std::vector<int> v_sizes = policy_sizes;
  v_sizes.back() = 1;
  std::vector<int> q_sizes = v_sizes;
  q_sizes.front() = 3;  // (obs, action)

  Rng init(derive_seed(seed, "policy-init"));
  nets_.policy = GaussianPolicy::init(policy_sizes, init, 0.01);
  nets_.policy.log_std.assign(1, cfg_.initial_log_std);
  // pre-squash bias so the untrained squashed mean equals initial_action
  nets_.policy.mean.bias(nets_.policy.mean.num_layers() - 1)[0] =
      std::atanh(2.0 * cfg_.initial_action - 1.0);
  Rng init_vr(derive_seed(seed, "init-vr"));
  nets_.v_r = Mlp::init(v_sizes, init_vr, 1.0);
  Rng init_vc(derive_seed(seed, "init-vc"));
  nets_.v_c = Mlp::init(v_sizes, init_vc, 1.0);
  Rng init_qr(derive_seed(seed, "init-qr"));
  nets_.q_r = Mlp::init(q_sizes, init_qr, 1.0);
  Rng init_qc(derive_seed(seed, "init-qc"));
  nets_.q_c = Mlp::init(q_sizes, init_qc, 1.0);
  nets_.q_r_target = nets_.q_r;
  nets_.q_c_target = nets_.q_c;

  lag_.lambda = cfg_.lambda_init;
  lag_.lambda_lr = cfg_.lambda_lr;
  lag_.kappa = cfg_.kappa;

  rng_rollout_policy_ = Rng(derive_seed(seed, "rollout-policy"));
  rng_rollout_attack_ = Rng(derive_seed(seed, "rollout-attack"));
}

Attacker PpolTrainer::rollout_attacker(double eps) const {
  Attacker attacker;
  attacker.budget = budget_;
  attacker.budget.epsilon = eps;
  attacker.cfg = attack_cfg_;
  switch (method_) {
    case Method::kPpolRandom: attacker.kind = AttackKind::kUniform; break;
    case Method::kAdvPpolMc: attacker.kind = AttackKind::kMc; break;
    case Method::kAdvPpolMr: attacker.kind = AttackKind::kMr; break;
    default: attacker.kind = AttackKind::kNone; break;  // vanilla and SA roll out clean
  }
  return attacker;
}

void PpolTrainer::apply_sa_perturbations(RolloutBatch& batch, double eps, Rng& attack_rng) const {
  Attacker attacker;
  attacker.budget = budget_;
  attacker.budget.epsilon = eps;
  attacker.cfg = attack_cfg_;
  switch (method_) {
    case Method::kSaPpol: attacker.kind = AttackKind::kMad; break;
    case Method::kSaPpolMc: attacker.kind = AttackKind::kMc; break;
    case Method::kSaPpolMr: attacker.kind = AttackKind::kMr; break;
    default: return;
  }
  AttackContext ctx{&nets_.policy, &nets_.q_r, &nets_.q_c};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> pert = attacker.apply(batch.obs_at(i), ctx, attack_rng);
    std::copy(pert.begin(), pert.end(), batch.obs_pert.begin() + i * batch.obs_dim);
  }
}

void PpolTrainer::train_epoch(int epoch, std::vector<EpochStats>& history) {
  const bool sa_method =
      method_ == Method::kSaPpol || method_ == Method::kSaPpolMc || method_ == Method::kSaPpolMr;
  const double eps = epsilon_schedule(epoch, cfg_.epochs, cfg_.eps_ramp_fraction, budget_.epsilon);

  const Attacker attacker = rollout_attacker(eps);
  const AttackContext ctx{&nets_.policy, &nets_.q_r, &nets_.q_c};
  RolloutBatch batch =
      collect_rollout(env_, nets_.policy, attacker, ctx, cfg_.steps_per_epoch, nets_.v_r,
                      nets_.v_c, cfg_.gamma, cfg_.gae_lambda, rng_rollout_policy_,
                      rng_rollout_attack_, cfg_.initial_soc_jitter);
  if (sa_method) apply_sa_perturbations(batch, eps, rng_rollout_attack_);

  double cost_mean = 0.0;
  double reward_mean = 0.0;
  for (double c : batch.episode_costs) cost_mean += c;
  for (double r : batch.episode_rewards) reward_mean += r;
  cost_mean /= static_cast<double>(batch.episode_costs.size());
  reward_mean /= static_cast<double>(batch.episode_rewards.size());

  lag_ = lambda_update(lag_, cost_mean);

  const ObsSource source = sa_method ? ObsSource::kClean : ObsSource::kPerturbed;
  double actor_loss = 0.0;
  std::vector<double> mean_grad(nets_.policy.mean.params().size());
  std::vector<double> log_std_grad(nets_.policy.log_std.size());
  for (int m = 0; m < cfg_.update_iters; ++m) {
    std::fill(mean_grad.begin(), mean_grad.end(), 0.0);
    std::fill(log_std_grad.begin(), log_std_grad.end(), 0.0);
    actor_loss = ppo_lagrangian_loss(batch, nets_.policy, lag_, cfg_.clip_ratio, source,
                                     cfg_.scale_loss_by_lambda, &mean_grad, &log_std_grad);
    if (sa_method) {
      std::vector<double> kl_mean_grad(mean_grad.size(), 0.0);
      std::vector<double> kl_log_std_grad(log_std_grad.size(), 0.0);
      const double kl =
          sa_kl_regularizer(batch, nets_.policy, &kl_mean_grad, &kl_log_std_grad);
      actor_loss += cfg_.kl_weight_beta * kl;
      for (std::size_t i = 0; i < mean_grad.size(); ++i) {
        mean_grad[i] += cfg_.kl_weight_beta * kl_mean_grad[i];
      }
      for (std::size_t i = 0; i < log_std_grad.size(); ++i) {
        log_std_grad[i] += cfg_.kl_weight_beta * kl_log_std_grad[i];
      }
    }
    adam_step(nets_.policy.mean.params(), mean_grad, opt_mean_, cfg_.actor_lr);
    adam_step(nets_.policy.log_std, log_std_grad, opt_log_std_, cfg_.actor_lr);
    nets_.policy.clamp_log_std();
  }

  const CriticLosses v_losses = update_value_critics(batch, nets_.v_r, nets_.v_c, opt_vr_,
                                                     opt_vc_, cfg_.critic_lr, cfg_.critic_iters);
  update_q_critics(batch, nets_.policy, nets_.q_r, nets_.q_c, nets_.q_r_target, nets_.q_c_target,
                   opt_qr_, opt_qc_, cfg_.critic_lr, cfg_.gamma, cfg_.polyak_tau,
                   cfg_.critic_iters);

  EpochStats stats;
  stats.epoch = epoch;
  stats.reward = reward_mean;
  stats.cost = cost_mean;
  stats.lambda = lag_.lambda;
  stats.epsilon = eps;
  stats.actor_loss = actor_loss;
  stats.critic_loss_r = v_losses.loss_r;
  stats.critic_loss_c = v_losses.loss_c;
  if (!std::isfinite(stats.reward) || !std::isfinite(stats.cost)) {
    throw std::runtime_error("non-finite episode statistics");
  }
  history.push_back(stats);
}

TrainResult PpolTrainer::run(const std::function<void(const EpochStats&)>& on_epoch) {
  TrainResult result;
  result.method = method_;
  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    try {
      train_epoch(epoch, result.history);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(epoch, e.what());
    }
    if (on_epoch) on_epoch(result.history.back());
  }
  result.nets = nets_;
  result.lagrangian = lag_;
  result.optim = {opt_mean_, opt_log_std_, opt_vr_, opt_vc_, opt_qr_, opt_qc_};
  result.rng_policy = {rng_rollout_policy_.state(), rng_rollout_policy_.has_spare(),
                       rng_rollout_policy_.spare()};
  result.rng_attack = {rng_rollout_attack_.state(), rng_rollout_attack_.has_spare(),
                       rng_rollout_attack_.spare()};
  return result;
}

}  // namespace hevrl
