#include "hevrl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hevrl {

void AttackBudget::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("attack epsilon must be >= 0");
}

void AttackConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("attack steps must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("attack beta must be > 0");
  if (eps_q < 0.0 || eps_s < 0.0) throw std::invalid_argument("attack thresholds must be >= 0");
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("attack xi must be in (0,1)");
}

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kUniform: return "uniform";
    case AttackKind::kMc: return "mc";
    case AttackKind::kMr: return "mr";
    case AttackKind::kMad: return "mad";
    case AttackKind::kAmad: return "amad";
  }
  return "?";
}

AttackKind attack_kind_from_name(std::string_view name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "uniform") return AttackKind::kUniform;
  if (name == "mc") return AttackKind::kMc;
  if (name == "mr") return AttackKind::kMr;
  if (name == "mad") return AttackKind::kMad;
  if (name == "amad") return AttackKind::kAmad;
  throw std::invalid_argument("unknown attack kind: " + std::string(name));
}

std::vector<double> project_to_ball(std::span<const double> s0, std::span<const double> s,
                                    const AttackBudget& budget) {
  if (s0.size() != s.size()) throw std::invalid_argument("projection dimension mismatch");
  std::vector<double> out(s.begin(), s.end());
  if (budget.norm == Norm::kLinf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::clamp(out[i], s0[i] - budget.epsilon, s0[i] + budget.epsilon);
    }
  } else {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out[i] - s0[i];
      norm2 += d * d;
    }
    const double norm = std::sqrt(norm2);
    if (norm > budget.epsilon) {
      const double shrink = budget.epsilon / norm;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s0[i] + (out[i] - s0[i]) * shrink;
      }
    }
  }
  return out;
}

std::vector<double> uniform_attack(std::span<const double> s, const AttackBudget& budget,
                                   Rng& rng) {
  std::vector<double> out(s.begin(), s.end());
  for (double& v : out) v += rng.uniform(-budget.epsilon, budget.epsilon);
  return project_to_ball(s, out, budget);
}

namespace {

double linf_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// squashed-mean action node on the tape
int mean_action_on_tape(Tape& tape, const GaussianPolicy& policy, const MlpVars& vars, int s) {
  const int mu = forward_on_tape(tape, policy.mean, vars, s);
  return tape.scale(tape.add_const(tape.tanh_(mu), 1.0), 0.5);
}

struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
  bool finite() const {
    if (!std::isfinite(value)) return false;
    for (double g : grad) {
      if (!std::isfinite(g)) return false;
    }
    return true;
  }
};

// value and d/ds of Q(s0, squash(mean(s)))
ValueGrad q_value_grad(std::span<const double> s0, std::span<const double> s,
                       const GaussianPolicy& policy, const Mlp& q_net) {
  Tape tape;
  const int sid = tape.leaf(s, true);
  const int s0id = tape.leaf(s0, false);
  const MlpVars pvars = bind(tape, policy.mean, false);
  const int act = mean_action_on_tape(tape, policy, pvars, sid);
  const MlpVars qvars = bind(tape, q_net, false);
  const int q = forward_on_tape(tape, q_net, qvars, tape.concat(s0id, act));
  tape.backward(q);
  ValueGrad out;
  out.value = tape.value(q)[0];
  auto g = tape.grad(sid);
  out.grad.assign(g.begin(), g.end());
  return out;
}

// value and d/ds of KL[pi(.|s0) || pi(.|s)]; log_std is state-independent so
// only the mean-shift term carries gradient.
ValueGrad kl_value_grad(std::span<const double> s0, std::span<const double> s,
                        const GaussianPolicy& policy) {
  Tape tape;
  const int sid = tape.leaf(s, true);
  const MlpVars pvars = bind(tape, policy.mean, false);
  const int mu_b = forward_on_tape(tape, policy.mean, pvars, sid);

  const std::vector<double> mu_a = policy.mean.forward(s0);
  std::vector<double> inv_two_var(mu_a.size());
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    inv_two_var[i] = 0.5 / std::exp(2.0 * policy.log_std[i]);
  }
  const int diff = tape.sub(tape.leaf(mu_a, false), mu_b);
  const int kl = tape.dot(tape.mul(diff, diff), tape.leaf(inv_two_var, false));
  tape.backward(kl);
  ValueGrad out;
  out.value = tape.value(kl)[0];
  auto g = tape.grad(sid);
  out.grad.assign(g.begin(), g.end());
  return out;
}

}  // namespace

double attack_q_value(std::span<const double> s0, std::span<const double> s,
                      const GaussianPolicy& policy, const Mlp& q_net) {
  const std::vector<double> act = policy.mean_action(s);
  std::vector<double> input(s0.begin(), s0.end());
  input.insert(input.end(), act.begin(), act.end());
  return q_net.forward(input)[0];
}

std::vector<double> mc_mr_attack(std::span<const double> s0, const GaussianPolicy& policy,
                                 const Mlp& q_net, const AttackBudget& budget,
                                 const AttackConfig& cfg, std::vector<double>* q_trace) {
  budget.validate();
  cfg.validate();
  const double eta = cfg.step_size(budget.epsilon);

  std::vector<double> s(s0.begin(), s0.end());
  double q_prev = attack_q_value(s0, s, policy, q_net);
  std::vector<double> best_s = s;
  double best_q = q_prev;
  if (q_trace) {
    q_trace->clear();
    q_trace->push_back(q_prev);
  }

  for (int k = 1; k <= cfg.steps; ++k) {
    const ValueGrad g = q_value_grad(s0, s, policy, q_net);
    if (!g.finite()) return best_s;

    // gradient ascent with per-step backtracking
    std::vector<double> cand;
    double q_cand = 0.0;
    bool accepted = false;
    double step = eta;
    for (int tries = 0; tries < 5; ++tries) {
      cand.assign(s.begin(), s.end());
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += step * g.grad[i];
      cand = project_to_ball(s0, cand, budget);
      q_cand = attack_q_value(s0, cand, policy, q_net);
      if (q_cand >= q_prev) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      cand = best_s;
      q_cand = best_q;
    }

    const double dq = std::abs(q_cand - q_prev);
    const double ds = linf_dist(cand, s);
    s = cand;
    q_prev = q_cand;
    if (accepted && q_trace) q_trace->push_back(q_cand);
    if (q_cand > best_q) {
      best_q = q_cand;
      best_s = s;
    }
    if (dq < cfg.eps_q && ds < cfg.eps_s) break;
  }
  return s;
}

double mad_kl_objective(std::span<const double> s0, std::span<const double> s,
                        const GaussianPolicy& policy) {
  const std::vector<double> mu_a = policy.mean.forward(s0);
  const std::vector<double> mu_b = policy.mean.forward(s);
  double kl = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double dmu = mu_a[i] - mu_b[i];
    kl += dmu * dmu * 0.5 / std::exp(2.0 * policy.log_std[i]);
  }
  return kl;
}

std::vector<double> mad_attack(std::span<const double> s0, const GaussianPolicy& policy,
                               const AttackBudget& budget, const AttackConfig& cfg, Rng& rng) {
  budget.validate();
  cfg.validate();
  const double eta = cfg.step_size(budget.epsilon);
  const double noise_scale = std::sqrt(2.0 / (cfg.beta * eta));

  std::vector<double> s(s0.begin(), s0.end());
  double kl_prev = 0.0;
  std::vector<double> best_s = s;
  double best_kl = 0.0;

  for (int k = 1; k <= cfg.steps; ++k) {
    const ValueGrad g = kl_value_grad(s0, s, policy);
    if (!g.finite()) return best_s;

    // l_MAD = -KL, so descending l_MAD ascends the KL objective
    std::vector<double> cand(s.begin(), s.end());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const double sgld = -g.grad[i] + noise_scale * rng.gaussian();
      cand[i] -= eta * sgld;
    }
    cand = project_to_ball(s0, cand, budget);

    const double kl = mad_kl_objective(s0, cand, policy);
    const double dq = std::abs(kl - kl_prev);
    const double ds = linf_dist(cand, s);
    s = cand;
    kl_prev = kl;
    if (kl > best_kl) {
      best_kl = kl;
      best_s = s;
    }
    if (dq < cfg.eps_q && ds < cfg.eps_s) break;
  }
  return s;
}

double cost_value(std::span<const double> s, const GaussianPolicy& policy, const Mlp& q_c) {
  return attack_q_value(s, s, policy, q_c);
}

double amad_threshold(std::span<const double> cost_values, double xi) {
  if (cost_values.empty()) throw std::invalid_argument("AMAD needs a nonempty batch");
  std::vector<double> sorted(cost_values.begin(), cost_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q = 1.0 - xi;
  const auto n = static_cast<double>(sorted.size());
  const int idx = std::max(0, static_cast<int>(std::ceil(q * n)) - 1);
  return sorted[static_cast<std::size_t>(idx)];
}

std::vector<std::vector<double>> amad_attack(const std::vector<std::vector<double>>& batch,
                                             const GaussianPolicy& policy, const Mlp& q_c,
                                             const AttackBudget& budget, const AttackConfig& cfg,
                                             Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("AMAD needs a nonempty batch");
  std::vector<double> values(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) values[i] = cost_value(batch[i], policy, q_c);
  const double threshold = amad_threshold(values, cfg.xi);

  std::vector<std::vector<double>> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = values[i] > threshold ? mad_attack(batch[i], policy, budget, cfg, rng) : batch[i];
  }
  return out;
}

std::vector<double> Attacker::apply(std::span<const double> s, const AttackContext& ctx,
                                    Rng& rng) const {
  switch (kind) {
    case AttackKind::kNone:
      return {s.begin(), s.end()};
    case AttackKind::kUniform:
      return uniform_attack(s, budget, rng);
    case AttackKind::kMc:
      return mc_mr_attack(s, *ctx.policy, *ctx.q_c, budget, cfg);
    case AttackKind::kMr:
      return mc_mr_attack(s, *ctx.policy, *ctx.q_r, budget, cfg);
    case AttackKind::kMad:
      return mad_attack(s, *ctx.policy, budget, cfg, rng);
    case AttackKind::kAmad:
      if (cost_value(s, *ctx.policy, *ctx.q_c) > amad_vc_threshold) {
        return mad_attack(s, *ctx.policy, budget, cfg, rng);
      }
      return {s.begin(), s.end()};
  }
  throw std::logic_error("unreachable attack kind");
}

}  // namespace hevrl
