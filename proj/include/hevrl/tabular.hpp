#pragma once

#include <string>
#include <vector>

#include "hevrl/rng.hpp"

namespace hevrl {

// Finite CMDP with reward and cost signals on (s, a, s') triples.
struct TabularCmdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.9;
  std::vector<double> p;       // [s][a][s'], each row sums to 1
  std::vector<double> reward;  // [s][a][s']
  std::vector<double> cost;    // [s][a][s'], in [0, C_m]
  std::vector<double> mu0;

  double& prob(int s, int a, int s2) { return p[idx(s, a, s2)]; }
  double prob(int s, int a, int s2) const { return p[idx(s, a, s2)]; }
  std::size_t idx(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * n_actions + a) * n_states + s2;
  }

  double max_cost() const;                 // C_m
  std::vector<bool> unsafe_states() const; // S_c: states reachable with positive cost
  // max_a sum_{s' in S_c} p(s'|s,a)
  double unsafe_transition_prob(int s) const;
  void validate() const;
};

// row-stochastic policy [s][a]
using PolicyMatrix = std::vector<double>;

// deterministic observation attack: state index -> perturbed state index
struct TabularAttacker {
  std::vector<int> map;
};

// admissible perturbation sets; B[s] always contains s
using Neighborhoods = std::vector<std::vector<int>>;

enum class Flavor { kReward, kCost };

// Fixed point of the attacked Bellman evaluation operator by iteration.
// attacker == nullptr means the identity attack.
std::vector<double> policy_eval(const TabularCmdp& mdp, const PolicyMatrix& pi, Flavor flavor,
                                const TabularAttacker* attacker = nullptr, double tol = 1e-12);

// One application of the attacked Bellman evaluation operator.
std::vector<double> bellman_apply(const TabularCmdp& mdp, const PolicyMatrix& pi, Flavor flavor,
                                  const TabularAttacker* attacker, const std::vector<double>& v);

double initial_value(const TabularCmdp& mdp, const std::vector<double>& v);

// Exhaustive search over deterministic attackers with nu(s) in B(s).
// Throws when the product of neighborhood sizes exceeds 1e6.
std::pair<TabularAttacker, double> best_deterministic_attacker(const TabularCmdp& mdp,
                                                               const PolicyMatrix& pi,
                                                               const Neighborhoods& B,
                                                               Flavor objective);

// Value of a per-state stochastic attacker: the corrupted policy mixes
// pi(.|s') with the given weights over B(s).
double stochastic_attacker_value(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B,
                                 const std::vector<std::vector<double>>& weights, Flavor objective);

// Exact total-variation Lipschitz constant of the policy over the
// neighborhood structure under the discrete state metric.
double exact_lipschitz(const TabularCmdp& mdp, const PolicyMatrix& pi, const Neighborhoods& B);

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs, at the worst state
  bool holds = false;
};

// One-step attack cost bound: for each state, the worst single-step attacker
// against 2 L eps (p_s C_m + gamma C_m / (1 - gamma)).
BoundReport check_one_step_bound(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B, double lipschitz, double epsilon);

// Episodic cost bound for a feasible policy against the enumerated worst
// persistent attacker.
BoundReport check_episodic_bound(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                 const Neighborhoods& B, double lipschitz, double epsilon,
                                 double kappa);

struct ContractionReport {
  double ratio = 0.0;
  bool holds = false;
};

// sup-norm contraction factor of the attacked Bellman operator on (v1, v2).
ContractionReport check_contraction(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                    const TabularAttacker& attacker, Flavor flavor,
                                    const std::vector<double>& v1, const std::vector<double>& v2);

// Random instances: Dirichlet transitions, Bernoulli cost sparsity.
TabularCmdp random_cmdp(int n_states, int n_actions, double gamma, Rng& rng);
PolicyMatrix random_policy(const TabularCmdp& mdp, Rng& rng);
Neighborhoods random_neighborhoods(const TabularCmdp& mdp, int max_extra, Rng& rng);

struct TheoremResult {
  std::string name;
  int instances = 0;
  double min_margin = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<TheoremResult> results;
  bool all_pass() const;
};

// Runs the four theorem checks on freshly generated random instances.
VerifyReport run_verification_suite(int seeds, int n_states, int n_actions,
                                    std::uint64_t master_seed, int contraction_trials = 1000,
                                    int mixtures_per_instance = 100);

}  // namespace hevrl
