#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hevrl/tabular.hpp"

using namespace hevrl;

namespace {

// dense linear solve of (I - gamma P_pi) v = f_pi; independent of the
// iterative evaluation path
std::vector<double> linear_solve_eval(const TabularCmdp& mdp, const PolicyMatrix& pi,
                                      Flavor flavor) {
  const int n = mdp.n_states;
  const std::vector<double>& f = flavor == Flavor::kReward ? mdp.reward : mdp.cost;
  std::vector<double> A(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    A[static_cast<std::size_t>(s) * n + s] = 1.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = pi[static_cast<std::size_t>(s) * mdp.n_actions + a];
      for (int s2 = 0; s2 < n; ++s2) {
        const std::size_t i = mdp.idx(s, a, s2);
        A[static_cast<std::size_t>(s) * n + s2] -= mdp.gamma * pa * mdp.p[i];
        b[static_cast<std::size_t>(s)] += pa * mdp.p[i] * f[i];
      }
    }
  }
  // gaussian elimination with partial pivoting
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(A[static_cast<std::size_t>(r) * n + col]) >
          std::abs(A[static_cast<std::size_t>(pivot) * n + col])) {
        pivot = r;
      }
    }
    for (int c = 0; c < n; ++c) {
      std::swap(A[static_cast<std::size_t>(col) * n + c], A[static_cast<std::size_t>(pivot) * n + c]);
    }
    std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    const double d = A[static_cast<std::size_t>(col) * n + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = A[static_cast<std::size_t>(r) * n + col] / d;
      for (int c = col; c < n; ++c) {
        A[static_cast<std::size_t>(r) * n + c] -= factor * A[static_cast<std::size_t>(col) * n + c];
      }
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) v[static_cast<std::size_t>(s)] = b[static_cast<std::size_t>(s)] / A[static_cast<std::size_t>(s) * n + s];
  return v;
}

TabularCmdp absorbing_unit_reward(double gamma) {
  TabularCmdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.gamma = gamma;
  mdp.p = {1.0};
  mdp.reward = {1.0};
  mdp.cost = {0.0};
  mdp.mu0 = {1.0};
  return mdp;
}

}  // namespace

TEST_CASE("policy_eval basics") {
  SUBCASE("zero reward gives zero value") {
    Rng rng(1);
    TabularCmdp mdp = random_cmdp(4, 2, 0.9, rng);
    std::fill(mdp.reward.begin(), mdp.reward.end(), 0.0);
    const PolicyMatrix pi = random_policy(mdp, rng);
    for (double v : policy_eval(mdp, pi, Flavor::kReward)) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("absorbing state with unit reward") {
    const TabularCmdp mdp = absorbing_unit_reward(0.9);
    const PolicyMatrix pi = {1.0};
    CHECK(policy_eval(mdp, pi, Flavor::kReward)[0] == doctest::Approx(10.0).epsilon(1e-9));
  }
  SUBCASE("random 4-state CMDP matches the direct linear solve") {
    for (int seed = 0; seed < 20; ++seed) {
      Rng rng(1000 + static_cast<std::uint64_t>(seed));
      const TabularCmdp mdp = random_cmdp(4, 3, rng.uniform(0.3, 0.95), rng);
      const PolicyMatrix pi = random_policy(mdp, rng);
      for (Flavor flavor : {Flavor::kReward, Flavor::kCost}) {
        const auto iter = policy_eval(mdp, pi, flavor);
        const auto direct = linear_solve_eval(mdp, pi, flavor);
        for (int s = 0; s < 4; ++s) {
          CHECK(std::abs(iter[static_cast<std::size_t>(s)] - direct[static_cast<std::size_t>(s)]) < 1e-8);
        }
      }
    }
  }
  SUBCASE("rejects a non-stochastic policy") {
    const TabularCmdp mdp = absorbing_unit_reward(0.9);
    CHECK_THROWS_AS(policy_eval(mdp, PolicyMatrix{0.7}, Flavor::kReward), std::invalid_argument);
  }
}

TEST_CASE("best deterministic attacker") {
  SUBCASE("singleton neighborhoods give the identity attacker") {
    Rng rng(2);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.8, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    Neighborhoods B(4);
    for (int s = 0; s < 4; ++s) B[static_cast<std::size_t>(s)] = {s};
    const auto [nu, value] = best_deterministic_attacker(mdp, pi, B, Flavor::kCost);
    for (int s = 0; s < 4; ++s) CHECK(nu.map[static_cast<std::size_t>(s)] == s);
    CHECK(value ==
          doctest::Approx(initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost))).epsilon(1e-10));
  }

  SUBCASE("crafted 2-state instance is solved by the swap attacker") {
    // action 1 always enters the costly state; the clean policy plays safe at
    // state 0 and the best attack swaps the observations
    TabularCmdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.5;
    mdp.p.assign(8, 0.0);
    mdp.reward.assign(8, 0.0);
    mdp.cost.assign(8, 0.0);
    for (int s = 0; s < 2; ++s) {
      mdp.prob(s, 0, 0) = 1.0;  // action 0 -> safe state 0
      mdp.prob(s, 1, 1) = 1.0;  // action 1 -> unsafe state 1
      mdp.cost[mdp.idx(s, 1, 1)] = 1.0;
    }
    mdp.mu0 = {1.0, 0.0};
    mdp.validate();
    const PolicyMatrix pi = {1.0, 0.0,   // state 0: safe action
                             0.0, 1.0};  // state 1: unsafe action
    Neighborhoods B = {{0, 1}, {1, 0}};
    const auto [nu, value] = best_deterministic_attacker(mdp, pi, B, Flavor::kCost);
    CHECK(nu.map[0] == 1);
    CHECK(nu.map[1] == 1);  // keeping state 1 at the unsafe action maximizes cost
    // with both states observed as 1, every step enters the cost-1 state
    CHECK(value == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("no stochastic mixture beats the deterministic maximum") {
    Rng rng(3);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.85, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
    const auto [nu, det] = best_deterministic_attacker(mdp, pi, B, Flavor::kCost);
    (void)nu;
    for (int m = 0; m < 100; ++m) {
      std::vector<std::vector<double>> weights(B.size());
      for (std::size_t s = 0; s < B.size(); ++s) {
        weights[s].resize(B[s].size());
        double sum = 0.0;
        for (double& x : weights[s]) {
          x = rng.uniform01() + 1e-9;
          sum += x;
        }
        for (double& x : weights[s]) x /= sum;
      }
      CHECK(stochastic_attacker_value(mdp, pi, B, weights, Flavor::kCost) <= det + 1e-9);
    }
  }

  SUBCASE("oversized search space is rejected") {
    Rng rng(4);
    const TabularCmdp mdp = random_cmdp(8, 2, 0.8, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    Neighborhoods B(8);
    for (int s = 0; s < 8; ++s) {
      for (int s2 = 0; s2 < 8; ++s2) B[static_cast<std::size_t>(s)].push_back(s2);
    }
    CHECK_THROWS_AS(best_deterministic_attacker(mdp, pi, B, Flavor::kCost), std::runtime_error);
  }
}

TEST_CASE("one-step bound") {
  SUBCASE("epsilon zero is tight at zero") {
    Rng rng(5);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.8, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    Neighborhoods B(4);
    for (int s = 0; s < 4; ++s) B[static_cast<std::size_t>(s)] = {s};
    const BoundReport r = check_one_step_bound(mdp, pi, B, exact_lipschitz(mdp, pi, B), 0.0);
    CHECK(r.lhs == doctest::Approx(0.0).scale(1.0));
    CHECK(r.rhs == doctest::Approx(0.0).scale(1.0));
    CHECK(r.holds);
  }
  SUBCASE("no unsafe states and gamma zero collapse the bound to zero") {
    Rng rng(6);
    TabularCmdp mdp = random_cmdp(4, 2, 0.0, rng);
    std::fill(mdp.cost.begin(), mdp.cost.end(), 0.0);
    const PolicyMatrix pi = random_policy(mdp, rng);
    const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
    const BoundReport r = check_one_step_bound(mdp, pi, B, exact_lipschitz(mdp, pi, B), 1.0);
    CHECK(r.lhs == doctest::Approx(0.0).scale(1.0));
    CHECK(r.rhs == doctest::Approx(0.0).scale(1.0));
    CHECK(r.holds);
  }
  SUBCASE("holds on 100 random instances with the exact Lipschitz constant") {
    for (int seed = 0; seed < 100; ++seed) {
      Rng rng(7000 + static_cast<std::uint64_t>(seed));
      const TabularCmdp mdp = random_cmdp(5, 2, rng.uniform(0.3, 0.95), rng);
      const PolicyMatrix pi = random_policy(mdp, rng);
      const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
      const BoundReport r = check_one_step_bound(mdp, pi, B, exact_lipschitz(mdp, pi, B), 1.0);
      CHECK(r.holds);
    }
  }
  SUBCASE("sanity: a deliberately shrunk constant is caught") {
    // crafted instance where lhs is exactly half of rhs; a quartered L flips it
    TabularCmdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.5;
    mdp.p.assign(8, 0.0);
    mdp.reward.assign(8, 0.0);
    mdp.cost.assign(8, 0.0);
    for (int s = 0; s < 2; ++s) {
      mdp.prob(s, 0, 0) = 1.0;
      mdp.prob(s, 1, 1) = 1.0;
      mdp.cost[mdp.idx(s, 1, 1)] = 1.0;
    }
    mdp.mu0 = {1.0, 0.0};
    const PolicyMatrix pi = {1.0, 0.0, 0.0, 1.0};
    const Neighborhoods B = {{0, 1}, {1}};
    const double L = exact_lipschitz(mdp, pi, B);  // = 1
    const BoundReport ok = check_one_step_bound(mdp, pi, B, L, 1.0);
    CHECK(ok.holds);
    CHECK(ok.lhs == doctest::Approx(2.0));
    CHECK(ok.rhs == doctest::Approx(4.0));
    const BoundReport bad = check_one_step_bound(mdp, pi, B, L / 4.0, 1.0);
    CHECK_FALSE(bad.holds);
    CHECK(bad.margin < 0.0);
  }
}

TEST_CASE("episodic bound") {
  SUBCASE("epsilon zero reduces to feasibility") {
    Rng rng(8);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.8, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    Neighborhoods B(4);
    for (int s = 0; s < 4; ++s) B[static_cast<std::size_t>(s)] = {s};
    const double kappa = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
    const BoundReport r = check_episodic_bound(mdp, pi, B, exact_lipschitz(mdp, pi, B), 0.0, kappa);
    CHECK(r.lhs <= kappa + 1e-9);
    CHECK(r.rhs == doctest::Approx(kappa));
    CHECK(r.holds);
  }
  SUBCASE("a constant policy is attack-proof") {
    Rng rng(9);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.8, rng);
    PolicyMatrix pi(8);
    for (int s = 0; s < 4; ++s) {
      pi[static_cast<std::size_t>(s) * 2] = 0.4;
      pi[static_cast<std::size_t>(s) * 2 + 1] = 0.6;
    }
    const Neighborhoods B = random_neighborhoods(mdp, 3, rng);
    const double kappa = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
    CHECK(exact_lipschitz(mdp, pi, B) == 0.0);
    const BoundReport r = check_episodic_bound(mdp, pi, B, 0.0, 1.0, kappa);
    CHECK(r.lhs == doctest::Approx(kappa).epsilon(1e-9));
    CHECK(r.holds);
  }
  SUBCASE("holds on 100 random feasible instances") {
    for (int seed = 0; seed < 100; ++seed) {
      Rng rng(9000 + static_cast<std::uint64_t>(seed));
      const TabularCmdp mdp = random_cmdp(4, 2, rng.uniform(0.3, 0.9), rng);
      const PolicyMatrix pi = random_policy(mdp, rng);
      const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
      const double kappa = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
      const BoundReport r =
          check_episodic_bound(mdp, pi, B, exact_lipschitz(mdp, pi, B), 1.0, kappa);
      CHECK(r.holds);
    }
  }
  SUBCASE("infeasible policies are rejected") {
    Rng rng(10);
    const TabularCmdp mdp = random_cmdp(4, 2, 0.8, rng);
    const PolicyMatrix pi = random_policy(mdp, rng);
    const Neighborhoods B = random_neighborhoods(mdp, 2, rng);
    const double vc = initial_value(mdp, policy_eval(mdp, pi, Flavor::kCost));
    CHECK_THROWS_AS(check_episodic_bound(mdp, pi, B, 1.0, 1.0, vc * 0.5), std::invalid_argument);
  }
}

TEST_CASE("bellman contraction") {
  Rng rng(11);
  const TabularCmdp mdp = random_cmdp(5, 3, 0.9, rng);
  const PolicyMatrix pi = random_policy(mdp, rng);
  TabularAttacker nu;
  nu.map = {1, 0, 2, 4, 3};

  SUBCASE("constant shift contracts exactly by gamma") {
    std::vector<double> v1(5), v2(5);
    for (int s = 0; s < 5; ++s) {
      v1[static_cast<std::size_t>(s)] = rng.uniform(-5, 5);
      v2[static_cast<std::size_t>(s)] = v1[static_cast<std::size_t>(s)] + 3.0;
    }
    const ContractionReport r = check_contraction(mdp, pi, nu, Flavor::kReward, v1, v2);
    CHECK(r.ratio == doctest::Approx(mdp.gamma).epsilon(1e-12));
    CHECK(r.holds);
  }
  SUBCASE("identical vectors hold trivially") {
    const std::vector<double> v(5, 1.25);
    const ContractionReport r = check_contraction(mdp, pi, nu, Flavor::kCost, v, v);
    CHECK(r.holds);
    CHECK(r.ratio == 0.0);
  }
  SUBCASE("gamma zero is a total contraction") {
    Rng rng2(12);
    const TabularCmdp m0 = random_cmdp(4, 2, 0.0, rng2);
    const PolicyMatrix p0 = random_policy(m0, rng2);
    TabularAttacker id;
    id.map = {0, 1, 2, 3};
    std::vector<double> v1(4), v2(4);
    for (int s = 0; s < 4; ++s) {
      v1[static_cast<std::size_t>(s)] = rng2.uniform(-5, 5);
      v2[static_cast<std::size_t>(s)] = rng2.uniform(-5, 5);
    }
    const ContractionReport r = check_contraction(m0, p0, id, Flavor::kReward, v1, v2);
    CHECK(r.ratio == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("random pairs on random instances stay under gamma") {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> v1(5), v2(5);
      for (int s = 0; s < 5; ++s) {
        v1[static_cast<std::size_t>(s)] = rng.uniform(-10, 10);
        v2[static_cast<std::size_t>(s)] = rng.uniform(-10, 10);
      }
      const ContractionReport r = check_contraction(mdp, pi, nu, Flavor::kCost, v1, v2);
      CHECK(r.holds);
    }
  }
  SUBCASE("the fixed point of the attacked operator matches policy_eval") {
    const auto v = policy_eval(mdp, pi, Flavor::kCost, &nu);
    const auto tv = bellman_apply(mdp, pi, Flavor::kCost, &nu, v);
    for (int s = 0; s < 5; ++s) {
      CHECK(std::abs(tv[static_cast<std::size_t>(s)] - v[static_cast<std::size_t>(s)]) < 1e-8);
    }
  }
}

TEST_CASE("verification suite passes and reports margins") {
  const VerifyReport report = run_verification_suite(10, 4, 2, 123456, 100, 20);
  REQUIRE(report.results.size() == 4);
  for (const auto& r : report.results) {
    INFO(r.name);
    CHECK(r.pass);
    CHECK(r.instances > 0);
  }
  CHECK(report.all_pass());
}
