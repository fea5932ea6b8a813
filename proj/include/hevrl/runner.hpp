#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hevrl/config.hpp"

namespace hevrl {

// exit codes shared by the CLI
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // invalid config / refusal
inline constexpr int kExitDiverged = 3;    // numeric divergence during training

struct RunPaths {
  std::filesystem::path base_dir;  // resolves relative cycle paths; may be empty
  std::filesystem::path out_dir;
};

// One training run per seed (optionally fanned out over jobs threads);
// writes checkpoint_seed<s>.json, history_seed<s>.csv and manifest.json.
int cmd_train(const RunConfig& cfg, const RunPaths& paths, bool force, int jobs,
              std::ostream& log);

// Evaluates every per-seed checkpoint in checkpoint_dir under the configured
// conditions; writes evaluation.csv and evaluation_table.txt.
int cmd_evaluate(const RunConfig& cfg, const RunPaths& paths,
                 const std::filesystem::path& checkpoint_dir, bool force, std::ostream& log);

// Tabular theorem certification; text report to log, CSV when csv_path given.
// Nonzero exit on any violation.
int cmd_verify(int seeds, int n_states, int n_actions, std::uint64_t master_seed,
               const std::filesystem::path& csv_path, std::ostream& log);

}  // namespace hevrl
