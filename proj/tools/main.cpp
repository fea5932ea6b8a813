#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hevrl/runner.hpp"

namespace {

// --seeds / --out overrides applied on top of the loaded config
struct CommonOpts {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool force = false;
};

hevrl::RunConfig load_with_overrides(const CommonOpts& opts) {
  hevrl::RunConfig cfg = hevrl::load_config(opts.config_path);
  if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
  if (!opts.out_dir.empty()) cfg.output.dir = opts.out_dir;
  cfg.validate();
  return cfg;
}

hevrl::RunPaths paths_for(const hevrl::RunConfig& cfg, const std::string& config_path) {
  hevrl::RunPaths paths;
  paths.base_dir = std::filesystem::absolute(config_path).parent_path();
  paths.out_dir = cfg.output.dir;
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained-RL laboratory for fuel-optimal HEV control under "
               "observation perturbations"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  int jobs = 1;
  CLI::App* train = app.add_subcommand("train", "Train one method across seeds");
  train->add_option("--config", train_opts.config_path, "Run config (JSON)")->required();
  train->add_option("--seeds", train_opts.seeds, "Override config seed list");
  train->add_option("--out", train_opts.out_dir, "Override output directory");
  train->add_option("--jobs", jobs, "Concurrent per-seed runs");
  train->add_flag("--force", train_opts.force, "Overwrite an existing output directory");

  CommonOpts eval_opts;
  std::string checkpoint_dir;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate trained checkpoints");
  evaluate->add_option("--config", eval_opts.config_path, "Run config (JSON)")->required();
  evaluate->add_option("--checkpoints", checkpoint_dir,
                       "Directory holding checkpoint_seed<s>.json (default: output dir)");
  evaluate->add_option("--seeds", eval_opts.seeds, "Override config seed list");
  evaluate->add_option("--out", eval_opts.out_dir, "Override output directory");
  evaluate->add_flag("--force", eval_opts.force, "Overwrite existing evaluation files");

  int verify_seeds = 100;
  int verify_states = 5;
  int verify_actions = 2;
  std::uint64_t verify_master = 20240815;
  std::string verify_csv;
  CLI::App* verify = app.add_subcommand("verify", "Certify the tabular theorem suite");
  verify->add_option("--seeds", verify_seeds, "Random instances per theorem");
  verify->add_option("--states", verify_states, "States per instance");
  verify->add_option("--actions", verify_actions, "Actions per instance");
  verify->add_option("--master-seed", verify_master, "Master seed for instance generation");
  verify->add_option("--out", verify_csv, "Also write the report as CSV");

  CLI::App* defaults = app.add_subcommand("print-defaults", "Emit the default config as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const hevrl::RunConfig cfg = load_with_overrides(train_opts);
      return hevrl::cmd_train(cfg, paths_for(cfg, train_opts.config_path), train_opts.force, jobs,
                              std::cout);
    }
    if (evaluate->parsed()) {
      const hevrl::RunConfig cfg = load_with_overrides(eval_opts);
      const hevrl::RunPaths paths = paths_for(cfg, eval_opts.config_path);
      const std::filesystem::path ckpt_dir =
          checkpoint_dir.empty() ? paths.out_dir : std::filesystem::path(checkpoint_dir);
      return hevrl::cmd_evaluate(cfg, paths, ckpt_dir, eval_opts.force, std::cout);
    }
    if (verify->parsed()) {
      return hevrl::cmd_verify(verify_seeds, verify_states, verify_actions, verify_master,
                               verify_csv, std::cout);
    }
    if (defaults->parsed()) {
      std::cout << hevrl::config_to_json(hevrl::default_config()).dump(1) << "\n";
      return hevrl::kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hevrl::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return hevrl::kExitUsage;
}
