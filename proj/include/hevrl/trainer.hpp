#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hevrl/attacks.hpp"
#include "hevrl/optim.hpp"
#include "hevrl/rollout.hpp"

namespace hevrl {

// The seven training regimes. ADV variants retrain the rollout adversary
// from the live Q critics each epoch; SA variants roll out clean and add the
// KL robustness regularizer against perturbed states.
enum class Method {
  kPpolVanilla,
  kPpolRandom,
  kSaPpol,     // MAD training attacker
  kSaPpolMc,
  kSaPpolMr,
  kAdvPpolMc,
  kAdvPpolMr,
};

const std::vector<Method>& method_registry();
const char* method_name(Method m);          // config token, e.g. "adv-ppol-mc"
const char* method_display_name(Method m);  // table name, e.g. "ADV-PPOL(MC)"
Method method_from_name(std::string_view name);

struct LagrangianState {
  double lambda = 0.0;
  double lambda_lr = 0.05;
  double kappa = 2.0;  // undiscounted episode-cost limit
};

// Projected dual ascent: lambda <- max(0, lambda + lr (cost - kappa)).
LagrangianState lambda_update(LagrangianState lag, double episode_cost_mean);

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  int epochs = 50;
  int steps_per_epoch = 4000;
  int update_iters = 10;  // actor steps per epoch
  int critic_iters = 10;
  double kl_weight_beta = 5.0;  // SA regularizer weight
  double kappa = 2.0;
  double lambda_lr = 0.05;
  double lambda_init = 0.0;
  double polyak_tau = 0.005;
  double eps_ramp_fraction = 0.5;  // fraction of epochs to reach the full radius
  bool scale_loss_by_lambda = true;
  double initial_log_std = -0.5;
  double initial_action = 0.5;  // centers the squashed action prior
  double initial_soc_jitter = 0.0;  // per-episode reset SOC spread

  void validate() const;
};

struct NetworkShape {
  std::vector<int> hidden = {256, 256};
};

// eps_n = eps_final * min(1, n / (ramp_fraction * total)), n >= 1
double epsilon_schedule(int epoch, int total_epochs, double ramp_fraction, double eps_final);

enum class ObsSource { kClean, kPerturbed };

// Actor loss: -(clipped surrogate on standardized reward advantages)
// + lambda * (plain surrogate on raw cost advantages), averaged and scaled by
// 1/(1+lambda). Optionally accumulates gradients for the mean net and
// log_std.
double ppo_lagrangian_loss(const RolloutBatch& batch, const GaussianPolicy& policy,
                           const LagrangianState& lag, double clip_ratio, ObsSource source,
                           bool scale_by_lambda, std::vector<double>* mean_grad = nullptr,
                           std::vector<double>* log_std_grad = nullptr);

// KL(stop_grad(pi(s)) || pi_theta(s~)) averaged over the batch; gradients
// flow only through the perturbed-state branch.
double sa_kl_regularizer(const RolloutBatch& batch, const GaussianPolicy& policy,
                         std::vector<double>* mean_grad = nullptr,
                         std::vector<double>* log_std_grad = nullptr);

struct CriticLosses {
  double loss_r = 0.0;
  double loss_c = 0.0;
};

// TD(0) regression toward f + gamma Q_target(s', mean_action(s')) on clean
// states, followed by a Polyak target refresh.
CriticLosses update_q_critics(const RolloutBatch& batch, const GaussianPolicy& policy, Mlp& q_r,
                              Mlp& q_c, Mlp& q_r_target, Mlp& q_c_target, AdamState& opt_r,
                              AdamState& opt_c, double lr, double gamma, double tau, int iters);

// Regression of the state-value critics toward the discounted returns.
CriticLosses update_value_critics(const RolloutBatch& batch, Mlp& v_r, Mlp& v_c, AdamState& opt_r,
                                  AdamState& opt_c, double lr, int iters);

struct EpochStats {
  int epoch = 0;
  double reward = 0.0;  // mean undiscounted episode reward in the batch
  double cost = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;
  double actor_loss = 0.0;
  double critic_loss_r = 0.0;
  double critic_loss_c = 0.0;
};

struct TrainerNets {
  GaussianPolicy policy;
  Mlp v_r, v_c;
  Mlp q_r, q_c;
  Mlp q_r_target, q_c_target;
};

struct OptimStates {
  AdamState mean, log_std, v_r, v_c, q_r, q_c;
};

struct RngSnapshot {
  std::uint64_t state = 0;
  bool has_spare = false;
  double spare = 0.0;
};

struct TrainResult {
  Method method = Method::kPpolVanilla;
  TrainerNets nets;
  LagrangianState lagrangian;
  std::vector<EpochStats> history;
  OptimStates optim;
  RngSnapshot rng_policy, rng_attack;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_ = 0;
};

class PpolTrainer {
 public:
  PpolTrainer(Environment env, Method method, TrainConfig cfg, AttackBudget budget,
              AttackConfig attack_cfg, NetworkShape shape, std::uint64_t seed);

  // Full training loop; throws TrainingDiverged on a non-finite loss.
  TrainResult run(const std::function<void(const EpochStats&)>& on_epoch = {});

  const TrainerNets& nets() const { return nets_; }
  Method method() const { return method_; }

 private:
  void train_epoch(int epoch, std::vector<EpochStats>& history);
  Attacker rollout_attacker(double eps) const;
  void apply_sa_perturbations(RolloutBatch& batch, double eps, Rng& attack_rng) const;

  Environment env_;
  Method method_;
  TrainConfig cfg_;
  AttackBudget budget_;
  AttackConfig attack_cfg_;
  TrainerNets nets_;
  LagrangianState lag_;
  AdamState opt_mean_, opt_log_std_, opt_vr_, opt_vc_, opt_qr_, opt_qc_;
  Rng rng_rollout_policy_, rng_rollout_attack_;
};

}  // namespace hevrl
