#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hevrl/evaluate.hpp"

using namespace hevrl;

namespace {

Environment nedc_env(int truncate = 0) {
  const auto path = std::filesystem::path(HEVRL_SOURCE_DIR) / "data" / "nedc.csv";
  DriveCycle cycle = load_cycle(path);
  if (truncate > 0) cycle = truncated(cycle, truncate);
  const int ts = cycle.num_steps();
  return Environment(std::move(cycle), VehicleParams{}, make_envelope(ts, 0.6, 0.7, 0.5, 0.1, 0.9));
}

TrainerNets nets_with_bias(double bias) {
  TrainerNets nets;
  nets.policy.mean = Mlp(std::vector<int>{2, 1});
  nets.policy.mean.bias(0)[0] = bias;
  nets.policy.log_std = {-0.5};
  nets.v_r = Mlp(std::vector<int>{2, 1});
  nets.v_c = Mlp(std::vector<int>{2, 1});
  nets.q_r = Mlp(std::vector<int>{3, 1});
  nets.q_c = Mlp(std::vector<int>{3, 1});
  nets.q_r_target = nets.q_r;
  nets.q_c_target = nets.q_c;
  return nets;
}

}  // namespace

TEST_CASE("zero-action policy reproduces the regen-drift golden trace") {
  // tanh(-40) == -1 exactly, so the squashed mean action is exactly zero:
  // no fuel is burned and the cost is pure envelope violation from SOC drift
  const Environment env = nedc_env();
  const TrainerNets nets = nets_with_bias(-40.0);
  const EvalStats stats = evaluate_policy(env, nets, AttackKind::kNone, AttackBudget{},
                                          AttackConfig{}, 3, 99);
  CHECK(stats.reward_mean == 0.0);
  CHECK(stats.reward_std == 0.0);

  // frozen cost total of the independent zero-action recurrence
  double golden_cost = 0.0;
  {
    std::ifstream in(std::filesystem::path(HEVRL_SOURCE_DIR) / "tests" / "golden" /
                     "nedc_const_a000.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto pos = line.rfind(',');
      golden_cost += std::stod(line.substr(pos + 1));
    }
  }
  CHECK(stats.cost_mean == doctest::Approx(golden_cost).epsilon(1e-9));
  CHECK(stats.cost_std == 0.0);
}

TEST_CASE("evaluation statistics are bit-reproducible") {
  const Environment env = nedc_env(150);
  const TrainerNets nets = nets_with_bias(0.2);
  AttackBudget budget;
  budget.epsilon = 0.02;
  for (AttackKind kind : {AttackKind::kUniform, AttackKind::kMad, AttackKind::kAmad}) {
    const EvalStats a = evaluate_policy(env, nets, kind, budget, AttackConfig{}, 5, 2024);
    const EvalStats b = evaluate_policy(env, nets, kind, budget, AttackConfig{}, 5, 2024);
    CHECK(a.reward_mean == b.reward_mean);
    CHECK(a.cost_mean == b.cost_mean);
    CHECK(a.episode_rewards == b.episode_rewards);
  }
}

TEST_CASE("zero-radius attacks are exactly the natural condition") {
  const Environment env = nedc_env(150);
  const TrainerNets nets = nets_with_bias(0.1);
  AttackBudget zero;
  zero.epsilon = 0.0;
  const EvalStats natural =
      evaluate_policy(env, nets, AttackKind::kNone, zero, AttackConfig{}, 3, 7);
  for (AttackKind kind : {AttackKind::kUniform, AttackKind::kMc, AttackKind::kMr,
                          AttackKind::kMad, AttackKind::kAmad}) {
    const EvalStats attacked = evaluate_policy(env, nets, kind, zero, AttackConfig{}, 3, 7);
    CHECK(attacked.reward_mean == natural.reward_mean);
    CHECK(attacked.cost_mean == natural.cost_mean);
  }
}

TEST_CASE("deterministic conditions have zero variance across episodes") {
  const Environment env = nedc_env(150);
  const TrainerNets nets = nets_with_bias(0.3);
  AttackBudget budget;
  budget.epsilon = 0.015;
  for (AttackKind kind : {AttackKind::kNone, AttackKind::kMc, AttackKind::kMr}) {
    const EvalStats stats = evaluate_policy(env, nets, kind, budget, AttackConfig{}, 4, 11);
    CHECK(stats.reward_std == 0.0);
    CHECK(stats.cost_std == 0.0);
  }
}

TEST_CASE("episode reward equals the negated cumulative fuel") {
  const Environment env = nedc_env(200);
  const TrainerNets nets = nets_with_bias(0.4);
  const EvalStats stats =
      evaluate_policy(env, nets, AttackKind::kNone, AttackBudget{}, AttackConfig{}, 1, 1);

  EnvState s = env.reset();
  for (int t = 0; t < env.num_steps(); ++t) {
    s = env.step(s, nets.policy.mean_action(env.observe(s).as_array())[0]).first;
  }
  CHECK(stats.episode_rewards[0] == doctest::Approx(-s.fuel_g_cum).epsilon(1e-12));
}
