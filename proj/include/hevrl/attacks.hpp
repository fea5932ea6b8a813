#pragma once

#include <span>
#include <vector>

#include "hevrl/network.hpp"
#include "hevrl/policy.hpp"
#include "hevrl/rng.hpp"

namespace hevrl {

enum class Norm { kL2, kLinf };

// lp-ball specification around the clean observation, in normalized units.
struct AttackBudget {
  Norm norm = Norm::kLinf;
  double epsilon = 0.015;

  void validate() const;
};

struct AttackConfig {
  int steps = 10;        // max attack iterations K
  double eta = 0.0;      // attack learning rate; <= 0 means epsilon / 4
  double beta = 10.0;    // SGLD inverse temperature
  double eps_q = 1e-5;   // objective-change early-stop threshold
  double eps_s = 1e-5;   // state-change early-stop threshold
  double xi = 0.1;       // AMAD percentile in (0,1)

  double step_size(double epsilon) const { return eta > 0.0 ? eta : epsilon / 4.0; }
  void validate() const;
};

enum class AttackKind { kNone, kUniform, kMc, kMr, kMad, kAmad };

const char* attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(std::string_view name);

// Nearest point of the ball around s0 to s; per-coordinate clamping for
// l-inf, radial shrink for l2.
std::vector<double> project_to_ball(std::span<const double> s0, std::span<const double> s,
                                    const AttackBudget& budget);

// Independent U(-eps, +eps) shift per coordinate, then projection (a no-op
// for l-inf). Result is intentionally not re-clamped to [0,1].
std::vector<double> uniform_attack(std::span<const double> s, const AttackBudget& budget, Rng& rng);

// Q(s0, squash(mean(s))) for the deterministic policy mean; the scalar the
// MC/MR attackers climb.
double attack_q_value(std::span<const double> s0, std::span<const double> s,
                      const GaussianPolicy& policy, const Mlp& q_net);

// Projected gradient ascent on Q with per-step backtracking: a step that
// lowers Q halves the rate up to 4 times, then falls back to the best
// iterate. Early stop when both the Q change and the state change drop under
// the configured thresholds. Deterministic. q_trace, when given, records
// Q(s0, mean(s^k)) for every accepted iterate (non-decreasing).
std::vector<double> mc_mr_attack(std::span<const double> s0, const GaussianPolicy& policy,
                                 const Mlp& q_net, const AttackBudget& budget,
                                 const AttackConfig& cfg, std::vector<double>* q_trace = nullptr);

double mad_kl_objective(std::span<const double> s0, std::span<const double> s,
                        const GaussianPolicy& policy);

// SGLD ascent on KL[pi(.|s0) || pi(.|s)] inside the ball.
std::vector<double> mad_attack(std::span<const double> s0, const GaussianPolicy& policy,
                               const AttackBudget& budget, const AttackConfig& cfg, Rng& rng);

// Cost value used by AMAD: V_c(s) = Q_c(s, squash(mean(s))).
double cost_value(std::span<const double> s, const GaussianPolicy& policy, const Mlp& q_c);

// Nearest-rank (1 - xi) percentile of the batch cost values.
double amad_threshold(std::span<const double> cost_values, double xi);

// Perturbs exactly the states whose cost value strictly exceeds the batch
// percentile threshold; everything else passes through unchanged.
std::vector<std::vector<double>> amad_attack(const std::vector<std::vector<double>>& batch,
                                             const GaussianPolicy& policy, const Mlp& q_c,
                                             const AttackBudget& budget, const AttackConfig& cfg,
                                             Rng& rng);

// Network snapshot the attackers read. Pointers may be null for kinds that do
// not need them.
struct AttackContext {
  const GaussianPolicy* policy = nullptr;
  const Mlp* q_r = nullptr;
  const Mlp* q_c = nullptr;
};

// Configured per-observation attacker used by rollout and evaluation. For
// kAmad the caller pre-computes the percentile threshold from a reference
// batch (the current rollout batch, or a natural episode at evaluation).
struct Attacker {
  AttackKind kind = AttackKind::kNone;
  AttackBudget budget;
  AttackConfig cfg;
  double amad_vc_threshold = 0.0;

  bool is_identity() const { return kind == AttackKind::kNone; }
  std::vector<double> apply(std::span<const double> s, const AttackContext& ctx, Rng& rng) const;
};

}  // namespace hevrl
