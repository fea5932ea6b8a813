#include "hevrl/runner.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hevrl/checkpoint.hpp"
#include "hevrl/evaluate.hpp"
#include "hevrl/tabular.hpp"

namespace hevrl {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string provenance_line(const RunConfig& cfg) {
  return std::string("# ") + kVersionString + " config=" + config_digest(cfg);
}

struct SeedRunOutput {
  std::uint64_t seed = 0;
  bool diverged = false;
  int diverged_epoch = 0;
  std::string error;
  std::vector<EpochStats> history;
};

void write_history_csv(const std::filesystem::path& path, const RunConfig& cfg,
                       std::uint64_t seed, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history: " + path.string());
  out << provenance_line(cfg) << " seed=" << seed << "\n";
  out << "epoch,reward,cost,lambda,epsilon,actor_loss,critic_loss_r,critic_loss_c\n";
  for (const EpochStats& s : history) {
    out << s.epoch << ',' << fmt(s.reward) << ',' << fmt(s.cost) << ',' << fmt(s.lambda) << ','
        << fmt(s.epsilon) << ',' << fmt(s.actor_loss) << ',' << fmt(s.critic_loss_r) << ','
        << fmt(s.critic_loss_c) << "\n";
  }
}

SeedRunOutput train_one_seed(const RunConfig& cfg, const RunPaths& paths, std::uint64_t seed) {
  SeedRunOutput out;
  out.seed = seed;
  const Environment env = make_environment(cfg, paths.base_dir);
  PpolTrainer trainer(env, method_from_name(cfg.method), cfg.train, make_budget(cfg),
                      make_attack_config(cfg), cfg.network, seed);
  const std::string digest = config_digest(cfg);
  const auto ckpt_path = paths.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".json");
  const auto hist_path = paths.out_dir / ("history_seed" + std::to_string(seed) + ".csv");

  try {
    TrainResult result = trainer.run(
        [&out](const EpochStats& stats) { out.history.push_back(stats); });
    save_checkpoint(ckpt_path, checkpoint_from_result(result, digest));
  } catch (const TrainingDiverged& e) {
    out.diverged = true;
    out.diverged_epoch = e.epoch();
    out.error = e.what();
    // dump whatever parameters we have for post-mortem inspection
    TrainResult partial;
    partial.method = trainer.method();
    partial.nets = trainer.nets();
    partial.history = out.history;
    save_checkpoint(paths.out_dir / ("checkpoint_seed" + std::to_string(seed) + "_diverged.json"),
                    checkpoint_from_result(partial, digest));
  }
  write_history_csv(hist_path, cfg, seed, out.history);
  return out;
}

}  // namespace

int cmd_train(const RunConfig& cfg, const RunPaths& paths, bool force, int jobs,
              std::ostream& log) {
  const auto manifest_path = paths.out_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path) && !force) {
    log << "refusing to overwrite existing run at " << paths.out_dir
        << " (pass --force to override)\n";
    return kExitUsage;
  }
  std::filesystem::create_directories(paths.out_dir);

  if (jobs < 1) jobs = 1;
  std::vector<SeedRunOutput> outputs(cfg.seeds.size());
  for (std::size_t begin = 0; begin < cfg.seeds.size(); begin += static_cast<std::size_t>(jobs)) {
    const std::size_t end =
        std::min(cfg.seeds.size(), begin + static_cast<std::size_t>(jobs));
    std::vector<std::future<SeedRunOutput>> wave;
    for (std::size_t i = begin; i < end; ++i) {
      wave.push_back(std::async(std::launch::async,
                                [&cfg, &paths, seed = cfg.seeds[i]] {
                                  return train_one_seed(cfg, paths, seed);
                                }));
    }
    for (std::size_t i = begin; i < end; ++i) outputs[i] = wave[i - begin].get();
  }

  json manifest;
  manifest["version"] = kVersionString;
  manifest["config_digest"] = config_digest(cfg);
  manifest["method"] = cfg.method;
  manifest["config"] = config_to_json(cfg);
  json runs = json::array();
  bool any_diverged = false;
  for (const SeedRunOutput& out : outputs) {
    json run;
    run["seed"] = out.seed;
    run["checkpoint"] = "checkpoint_seed" + std::to_string(out.seed) +
                        (out.diverged ? "_diverged.json" : ".json");
    run["history"] = "history_seed" + std::to_string(out.seed) + ".csv";
    run["diverged"] = out.diverged;
    if (out.diverged) {
      run["diverged_epoch"] = out.diverged_epoch;
      run["error"] = out.error;
      any_diverged = true;
    }
    if (!out.history.empty()) {
      run["final_reward"] = out.history.back().reward;
      run["final_cost"] = out.history.back().cost;
      run["final_lambda"] = out.history.back().lambda;
    }
    runs.push_back(run);
  }
  manifest["runs"] = runs;
  {
    std::ofstream out(manifest_path);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << manifest.dump(1) << "\n";
  }

  for (const SeedRunOutput& out : outputs) {
    log << cfg.method << " seed " << out.seed << ": "
        << (out.diverged ? "DIVERGED at epoch " + std::to_string(out.diverged_epoch)
                         : "completed " + std::to_string(out.history.size()) + " epochs")
        << "\n";
  }
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const RunPaths& paths,
                 const std::filesystem::path& checkpoint_dir, bool force, std::ostream& log) {
  const auto csv_path = paths.out_dir / "evaluation.csv";
  if (std::filesystem::exists(csv_path) && !force) {
    log << "refusing to overwrite existing evaluation at " << paths.out_dir
        << " (pass --force to override)\n";
    return kExitUsage;
  }
  std::filesystem::create_directories(paths.out_dir);

  const Environment env = make_environment(cfg, paths.base_dir);
  const AttackBudget budget = make_budget(cfg);
  const AttackConfig attack_cfg = make_attack_config(cfg);

  std::vector<std::pair<std::uint64_t, Checkpoint>> checkpoints;
  for (std::uint64_t seed : cfg.seeds) {
    const auto path = checkpoint_dir / ("checkpoint_seed" + std::to_string(seed) + ".json");
    if (!std::filesystem::exists(path)) {
      log << "missing checkpoint: " << path << "\n";
      return kExitUsage;
    }
    checkpoints.emplace_back(seed, load_checkpoint(path));
  }

  std::vector<std::string> conditions = cfg.eval.conditions;
  if (conditions.empty()) conditions = {cfg.attack.kind == "none" ? "natural" : cfg.attack.kind};

  struct Row {
    std::string condition;
    double reward_mean, reward_std, cost_mean, cost_std;
    int episodes;
  };
  std::vector<Row> rows;
  for (const std::string& cond : conditions) {
    const AttackKind kind = condition_from_name(cond);
    std::vector<double> rewards, costs;
    for (const auto& [seed, ckpt] : checkpoints) {
      const EvalStats stats = evaluate_policy(env, ckpt.nets, kind, budget, attack_cfg,
                                              cfg.eval.episodes, seed,
                                              cfg.train.initial_soc_jitter);
      rewards.insert(rewards.end(), stats.episode_rewards.begin(), stats.episode_rewards.end());
      costs.insert(costs.end(), stats.episode_costs.begin(), stats.episode_costs.end());
    }
    auto mean_of = [](const std::vector<double>& xs) {
      double m = 0.0;
      for (double x : xs) m += x;
      return m / static_cast<double>(xs.size());
    };
    auto std_of = [](const std::vector<double>& xs, double mean) {
      double v = 0.0;
      for (double x : xs) v += (x - mean) * (x - mean);
      return std::sqrt(v / static_cast<double>(xs.size()));
    };
    Row row;
    row.condition = cond;
    row.reward_mean = mean_of(rewards);
    row.reward_std = std_of(rewards, row.reward_mean);
    row.cost_mean = mean_of(costs);
    row.cost_std = std_of(costs, row.cost_mean);
    row.episodes = static_cast<int>(rewards.size());
    rows.push_back(row);
  }

  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write evaluation csv");
    out << provenance_line(cfg) << "\n";
    out << "method,condition,reward_mean,reward_std,cost_mean,cost_std,episodes,seeds\n";
    for (const Row& r : rows) {
      out << cfg.method << ',' << r.condition << ',' << fmt(r.reward_mean) << ','
          << fmt(r.reward_std) << ',' << fmt(r.cost_mean) << ',' << fmt(r.cost_std) << ','
          << r.episodes << ',' << checkpoints.size() << "\n";
    }
  }
  {
    std::ofstream out(paths.out_dir / "evaluation_table.txt");
    out << provenance_line(cfg) << "\n";
    const std::string display = method_display_name(method_from_name(cfg.method));
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-14s | %-9s | %22s | %22s\n", "Method", "Condition",
                  "Reward (mean +- std)", "Cost (mean +- std)");
    out << buf;
    out << std::string(78, '-') << "\n";
    for (const Row& r : rows) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-14s | %-9s | %10.2f +- %-9.2f | %10.2f +- %-9.2f\n",
                    display.c_str(), r.condition.c_str(), r.reward_mean, r.reward_std,
                    r.cost_mean, r.cost_std);
      out << line;
    }
  }
  log << "evaluated " << cfg.method << " over " << conditions.size() << " conditions x "
      << checkpoints.size() << " seeds -> " << csv_path << "\n";
  return kExitOk;
}

int cmd_verify(int seeds, int n_states, int n_actions, std::uint64_t master_seed,
               const std::filesystem::path& csv_path, std::ostream& log) {
  const VerifyReport report =
      run_verification_suite(seeds, n_states, n_actions, master_seed, 1000, 100);

  log << "theorem certification on " << seeds << " random CMDP instances (" << n_states
      << " states, " << n_actions << " actions)\n";
  char header[120];
  std::snprintf(header, sizeof(header), "%-36s | %-9s | %-13s | %s\n", "Theorem", "instances",
                "min margin", "result");
  log << header << std::string(78, '-') << "\n";
  for (const TheoremResult& r : report.results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-36s | %9d | %13.6g | %s\n", r.name.c_str(), r.instances,
                  r.min_margin, r.pass ? "PASS" : "FAIL");
    log << line;
  }

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write verify csv");
    out << "# " << kVersionString << " master_seed=" << master_seed << "\n";
    out << "theorem,instances,min_margin,pass\n";
    for (const TheoremResult& r : report.results) {
      out << '"' << r.name << "\"," << r.instances << ',' << fmt(r.min_margin) << ','
          << (r.pass ? 1 : 0) << "\n";
    }
  }
  return report.all_pass() ? kExitOk : 1;
}

}  // namespace hevrl
