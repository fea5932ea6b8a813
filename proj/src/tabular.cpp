#include "hevrl/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hevrl {

double TabularCmdp::max_cost() const {
  double cm = 0.0;
  for (double c : cost) cm = std::max(cm, c);
  return cm;
}

std::vector<bool> TabularCmdp::unsafe_states() const {
  std::vector<bool> unsafe(static_cast<std::size_t>(n_states), false);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      for (int s2 = 0; s2 < n_states; ++s2) {
        if (cost[idx(s, a, s2)] > 0.0) unsafe[static_cast<std::size_t>(s2)] = true;
      }
    }
  }
  return unsafe;
}

double TabularCmdp::unsafe_transition_prob(int s) const {
  const std::vector<bool> unsafe = unsafe_states();
  double best = 0.0;
  for (int a = 0; a < n_actions; ++a) {
    double mass = 0.0;
    for (int s2 = 0; s2 < n_states; ++s2) {
      if (unsafe[static_cast<std::size_t>(s2)]) mass += prob(s, a, s2);
    }
    best = std::max(best, mass);
  }
  return best;
}

void TabularCmdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("empty CMDP");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0,1)");
  const std::size_t n3 = static_cast<std::size_t>(n_states) * n_actions * n_states;
  if (p.size() != n3 || reward.size() != n3 || cost.size() != n3) {
    throw std::invalid_argument("CMDP tensor size mismatch");
  }
  if (mu0.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("mu0 size mismatch");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) sum += prob(s, a, s2);
      if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("transition row not stochastic");
    }
  }
  for (double c : cost) {
    if (c < 0.0) throw std::invalid_argument("costs must be >= 0");
  }
}

namespace {
void check_policy(const TabularCmdp& mdp, const PolicyMatrix& pi) {
  if (pi.size() != static_cast<std::size_t>(mdp.n_states) * mdp.n_actions) {
    throw std::invalid_argument("policy matrix size mismatch");
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = pi[static_cast<std::size_t>(s) * mdp.n_actions + a];
      if (w < 0.0) throw std::invalid_argument("policy has negative probability");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument("policy row not stochastic");
  }
}
}  // namespace

std::vector<double> bellman_apply(const TabularCmdp& mdp, const PolicyMatrix& pi, Flavor flavor,
                                  const TabularAttacker* attacker, const std::vector<double>& v) {
  const std::vector<double>& f = flavor == Flavor::kReward ? mdp.reward : mdp.cost;
  std::vector<double> out(static_cast<std::size_t>(mdp.n_states), 0.0);
  for (int s = 0; s < mdp.n_states; ++s) {
    const int obs = attacker ? attacker->map[static_cast<std::size_t>(s)] : s;
    double acc = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = pi[static_cast<std::size_t>(obs) * mdp.n_actions + a];
      if (pa == 0.0) continue;
      double inner = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const std::size_t i = mdp.idx(s, a, s2);
        inner += mdp.p[i] * (f[i] + mdp.gamma * v[static_cast<std::size_t>(s2)]);
      }
      acc += pa * inner;
    }
    out[static_cast<std::size_t>(s)] = acc;
  }
  return out;
}

std::vector<double> policy_eval(const TabularCmdp& mdp, const PolicyMatrix& pi, Flavor flavor,
                                const TabularAttacker* attacker, double tol) {
  mdp.validate();
  check_policy(mdp, pi);
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states), 0.0);
  for (int it = 0; it < 10'000'000; ++it) {
    std::vector<double> next = bellman_apply(mdp, pi, flavor, attacker, v);
    double diff = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
    v.swap(next);
    if (diff < tol) return v;
  }
  throw std::runtime_error("policy evaluation did not converge");
}

double initial_value(const TabularCmdp& mdp, const std::vector<double>& v) {
  double acc = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) acc += mdp.mu0[static_cast<std::size_t>(s)] * v[static_cast<std::size_t>(s)];
  return acc;
}

std::pair<TabularAttacker, double> best_deterministic_attacker(const TabularCmdp& mdp,
                                                               const PolicyMatrix& pi,
                                                               const Neighborhoods& B,
                                                               Flavor objective) {
  double combos = 1.0;
  for (const auto& b : B) {
    if (b.empty()) throw std::invalid_argument("empty neighborhood");
    combos *= static_cast<double>(b.size());
    if (combos > 1e6) throw std::runtime_error("attacker search space exceeds 1e6");
  }

  TabularAttacker nu;
  nu.map.resize(B.size());
  std::vector<std::size_t> pick(B.size(), 0);
  TabularAttacker best;
  double best_value = -std::numeric_limits<double>::infinity();

  for (;;) {
    for (std::size_t s = 0; s < B.size(); ++s) nu.map[s] = B[s][pick[s]];
    const double value = initial_value(mdp, policy_eval(mdp, pi, objective, &nu));
    if (value > best_value) {
      best_value = value;
      best = nu;
    }
    // odometer over the neighborhood product
    std::size_t i = 0;
    while (i < pick.size()) {
      if (++pick[i] < B[i].size()) break;
      pick[i] = 0;
      ++i;
    }
    if (i == pick.size()) break;
  }
  return {best, best_value};
}

double stochastic_attacker_value(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B,
                                 const std::vector<std::vector<double>>& weights,
                                 Flavor objective) {
  // the corrupted policy is the weight-mixed policy over perturbed states
  PolicyMatrix mixed(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  for (int s = 0; s < mdp.n_states; ++s) {
    const auto& b = B[static_cast<std::size_t>(s)];
    const auto& w = weights[static_cast<std::size_t>(s)];
    if (b.size() != w.size()) throw std::invalid_argument("mixture weights size mismatch");
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        mixed[static_cast<std::size_t>(s) * mdp.n_actions + a] +=
            w[k] * pi[static_cast<std::size_t>(b[k]) * mdp.n_actions + a];
      }
    }
  }
  return initial_value(mdp, policy_eval(mdp, mixed, objective));
}

double exact_lipschitz(const TabularCmdp& mdp, const PolicyMatrix& pi, const Neighborhoods& B) {
  double lip = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int s2 : B[static_cast<std::size_t>(s)]) {
      if (s2 == s) continue;
      double tv = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        tv += std::abs(pi[static_cast<std::size_t>(s) * mdp.n_actions + a] -
                       pi[static_cast<std::size_t>(s2) * mdp.n_actions + a]);
      }
      lip = std::max(lip, 0.5 * tv);  // discrete metric: d(s, s2) = 1
    }
  }
  return lip;
}

BoundReport check_one_step_bound(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B, double lipschitz, double epsilon) {
  mdp.validate();
  check_policy(mdp, pi);
  const double cm = mdp.max_cost();
  const std::vector<double> v_clean = policy_eval(mdp, pi, Flavor::kCost);

  BoundReport report;
  report.holds = true;
  report.margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < mdp.n_states; ++s) {
    // worst single-step perturbation at s, clean policy afterwards
    double worst = -std::numeric_limits<double>::infinity();
    for (int obs : B[static_cast<std::size_t>(s)]) {
      double acc = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double pa = pi[static_cast<std::size_t>(obs) * mdp.n_actions + a];
        if (pa == 0.0) continue;
        double inner = 0.0;
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const std::size_t i = mdp.idx(s, a, s2);
          inner += mdp.p[i] * (mdp.cost[i] + mdp.gamma * v_clean[static_cast<std::size_t>(s2)]);
        }
        acc += pa * inner;
      }
      worst = std::max(worst, acc);
    }
    const double lhs = worst - v_clean[static_cast<std::size_t>(s)];
    const double rhs = 2.0 * lipschitz * epsilon *
                       (mdp.unsafe_transition_prob(s) * cm + mdp.gamma * cm / (1.0 - mdp.gamma));
    const double margin = rhs - lhs;
    if (margin < report.margin) {
      report.margin = margin;
      report.lhs = lhs;
      report.rhs = rhs;
    }
  }
  report.holds = report.margin >= -1e-10;
  return report;
}

BoundReport check_episodic_bound(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B, double lipschitz, double epsilon,
                                 double kappa) {
  mdp.validate();
  check_policy(mdp, pi);
  const double v_clean = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
  if (v_clean > kappa + 1e-9) throw std::invalid_argument("policy is infeasible for this kappa");

  const double cm = mdp.max_cost();
  double max_ps = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) max_ps = std::max(max_ps, mdp.unsafe_transition_prob(s));

  auto [nu, lhs] = best_deterministic_attacker(mdp, pi, B, Flavor::kCost);
  (void)nu;
  const double g = mdp.gamma;
  const double le = lipschitz * epsilon;
  const double rhs =
      kappa + 2.0 * le * cm * (1.0 / (1.0 - g) + 4.0 * g * le / ((1.0 - g) * (1.0 - g))) *
                  (max_ps + g / (1.0 - g));

  BoundReport report;
  report.lhs = lhs;
  report.rhs = rhs;
  report.margin = rhs - lhs;
  report.holds = report.margin >= -1e-10;
  return report;
}

ContractionReport check_contraction(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                    const TabularAttacker& attacker, Flavor flavor,
                                    const std::vector<double>& v1, const std::vector<double>& v2) {
  mdp.validate();
  check_policy(mdp, pi);
  double dv = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) dv = std::max(dv, std::abs(v1[i] - v2[i]));

  ContractionReport report;
  if (dv == 0.0) {
    // identical inputs: ratio undefined, contraction holds trivially
    report.ratio = 0.0;
    report.holds = true;
    return report;
  }
  const std::vector<double> t1 = bellman_apply(mdp, pi, flavor, &attacker, v1);
  const std::vector<double> t2 = bellman_apply(mdp, pi, flavor, &attacker, v2);
  double dt = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) dt = std::max(dt, std::abs(t1[i] - t2[i]));
  report.ratio = dt / dv;
  report.holds = report.ratio <= mdp.gamma + 1e-12;
  return report;
}

TabularCmdp random_cmdp(int n_states, int n_actions, double gamma, Rng& rng) {
  TabularCmdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  const std::size_t n3 = static_cast<std::size_t>(n_states) * n_actions * n_states;
  mdp.p.resize(n3);
  mdp.reward.resize(n3);
  mdp.cost.assign(n3, 0.0);

  // unsafe landing states carry a state-specific cost in (0, 1]
  std::vector<double> landing_cost(static_cast<std::size_t>(n_states), 0.0);
  int n_unsafe = 0;
  for (int s = 0; s < n_states; ++s) {
    if (rng.uniform01() < 0.3) {
      landing_cost[static_cast<std::size_t>(s)] = rng.uniform(0.2, 1.0);
      ++n_unsafe;
    }
  }
  if (n_unsafe == 0) landing_cost[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_states)))] = 1.0;

  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      // Dirichlet(1,...,1) row via normalized exponentials
      double sum = 0.0;
      std::vector<double> row(static_cast<std::size_t>(n_states));
      for (int s2 = 0; s2 < n_states; ++s2) {
        row[static_cast<std::size_t>(s2)] = -std::log(1.0 - rng.uniform01());
        sum += row[static_cast<std::size_t>(s2)];
      }
      for (int s2 = 0; s2 < n_states; ++s2) {
        const std::size_t i = mdp.idx(s, a, s2);
        mdp.p[i] = row[static_cast<std::size_t>(s2)] / sum;
        mdp.reward[i] = rng.uniform(-1.0, 1.0);
        mdp.cost[i] = landing_cost[static_cast<std::size_t>(s2)];
      }
    }
  }
  mdp.mu0.assign(static_cast<std::size_t>(n_states), 1.0 / n_states);
  mdp.validate();
  return mdp;
}

PolicyMatrix random_policy(const TabularCmdp& mdp, Rng& rng) {
  PolicyMatrix pi(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = -std::log(1.0 - rng.uniform01());
      pi[static_cast<std::size_t>(s) * mdp.n_actions + a] = w;
      sum += w;
    }
    for (int a = 0; a < mdp.n_actions; ++a) pi[static_cast<std::size_t>(s) * mdp.n_actions + a] /= sum;
  }
  return pi;
}

Neighborhoods random_neighborhoods(const TabularCmdp& mdp, int max_extra, Rng& rng) {
  Neighborhoods B(static_cast<std::size_t>(mdp.n_states));
  for (int s = 0; s < mdp.n_states; ++s) {
    auto& b = B[static_cast<std::size_t>(s)];
    b.push_back(s);
    const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_extra) + 1));
    for (int k = 0; k < extra; ++k) {
      const int cand = static_cast<int>(rng.below(static_cast<std::uint64_t>(mdp.n_states)));
      if (std::find(b.begin(), b.end(), cand) == b.end()) b.push_back(cand);
    }
  }
  return B;
}

bool VerifyReport::all_pass() const {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return !results.empty();
}

VerifyReport run_verification_suite(int seeds, int n_states, int n_actions,
                                    std::uint64_t master_seed, int contraction_trials,
                                    int mixtures_per_instance) {
  VerifyReport report;
  TheoremResult t1{"T1 deterministic MC/MR optimality", 0,
                   std::numeric_limits<double>::infinity(), true};
  TheoremResult t2{"T2 one-step cost bound", 0, std::numeric_limits<double>::infinity(), true};
  TheoremResult t3{"T3 episodic cost bound", 0, std::numeric_limits<double>::infinity(), true};
  TheoremResult t4{"T4 Bellman contraction", 0, std::numeric_limits<double>::infinity(), true};

  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(derive_seed(master_seed, "verify-" + std::to_string(seed)));
    const TabularCmdp mdp = random_cmdp(n_states, n_actions, rng.uniform(0.3, 0.95), rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
    const double lip = exact_lipschitz(mdp, pi, B);

    // Theorem 1: no stochastic mixture beats the enumerated deterministic max
    for (Flavor objective : {Flavor::kCost, Flavor::kReward}) {
      const auto [nu, det_value] = best_deterministic_attacker(mdp, pi, B, objective);
      (void)nu;
      for (int m = 0; m < mixtures_per_instance / 2; ++m) {
        std::vector<std::vector<double>> weights(B.size());
        for (std::size_t s = 0; s < B.size(); ++s) {
          auto& w = weights[s];
          w.resize(B[s].size());
          double sum = 0.0;
          for (double& x : w) {
            x = -std::log(1.0 - rng.uniform01());
            sum += x;
          }
          for (double& x : w) x /= sum;
        }
        const double mix = stochastic_attacker_value(mdp, pi, B, weights, objective);
        t1.min_margin = std::min(t1.min_margin, det_value - mix);
      }
      ++t1.instances;
    }

    // Theorem 2: discrete metric, so any perturbed state sits at distance 1
    const BoundReport one_step = check_one_step_bound(mdp, pi, B, lip, 1.0);
    t2.min_margin = std::min(t2.min_margin, one_step.margin);
    ++t2.instances;

    // Theorem 3 with the tight kappa = V_c(mu0)
    const double kappa = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
    const BoundReport episodic = check_episodic_bound(mdp, pi, B, lip, 1.0, kappa);
    t3.min_margin = std::min(t3.min_margin, episodic.margin);
    ++t3.instances;

    // Theorem 4 on random value-vector pairs under a random attacker
    TabularAttacker nu;
    nu.map.resize(B.size());
    for (std::size_t s = 0; s < B.size(); ++s) {
      nu.map[s] = B[s][rng.below(B[s].size())];
    }
    const int trials = std::max(1, contraction_trials / std::max(1, seeds));
    for (int k = 0; k < trials; ++k) {
      std::vector<double> v1(static_cast<std::size_t>(mdp.n_states));
      std::vector<double> v2(static_cast<std::size_t>(mdp.n_states));
      for (auto& x : v1) x = rng.uniform(-10.0, 10.0);
      for (auto& x : v2) x = rng.uniform(-10.0, 10.0);
      const ContractionReport c = check_contraction(mdp, pi, nu,
                                                    k % 2 == 0 ? Flavor::kCost : Flavor::kReward,
                                                    v1, v2);
      t4.min_margin = std::min(t4.min_margin, mdp.gamma + 1e-12 - c.ratio);
      ++t4.instances;
    }
  }

  t1.pass = t1.min_margin >= -1e-9;
  t2.pass = t2.min_margin >= -1e-10;
  t3.pass = t3.min_margin >= -1e-10;
  t4.pass = t4.min_margin >= 0.0;
  report.results = {t1, t2, t3, t4};
  return report;
}

}  // namespace hevrl
