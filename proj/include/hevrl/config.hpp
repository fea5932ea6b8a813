#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hevrl/attacks.hpp"
#include "hevrl/powertrain.hpp"
#include "hevrl/trainer.hpp"

namespace hevrl {

inline constexpr const char* kVersionString = "hevrl 0.1.0";

struct CycleConfig {
  std::string path = "data/nedc.csv";
  double timestep_s = 1.0;
  int start_s = 0;         // window start within the trace
  int truncate_steps = 0;  // 0 keeps the full cycle from start_s
};

struct VehicleConfig {
  VehicleParams params;
  double velocity_norm_mps = 34.0;  // >= NEDC peak so observations stay in [0,1]
};

struct EnvelopeConfig {
  double balance = 0.6;
  double high = 0.7;
  double low = 0.5;
  double bl_fraction = 0.1;
  double br_fraction = 0.9;
};

struct AttackSection {
  std::string kind = "none";  // {none, uniform, mc, mr, mad, amad}
  std::string norm = "inf";   // {inf, 2}
  double epsilon = 0.015;
  int steps = 10;
  double eta = 0.0;  // 0 = epsilon / 4
  double beta = 10.0;
  double eps_q = 1e-5;
  double eps_s = 1e-5;
  double xi = 0.1;
};

struct EvalSection {
  int episodes = 50;
  std::vector<std::string> conditions = {"natural", "uniform", "mc", "mr", "mad", "amad"};
};

struct OutputSection {
  std::string dir = "runs/out";
};

// Whole-run configuration; every paper-unspecified constant is visible here
// and overridable. Unknown keys are rejected on load.
struct RunConfig {
  std::string method = "ppol-vanilla";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  CycleConfig cycle;
  VehicleConfig vehicle;
  EnvelopeConfig envelope;
  NetworkShape network;
  TrainConfig train;
  AttackSection attack;
  EvalSection eval;
  OutputSection output;

  void validate() const;
};

RunConfig default_config();
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical (sorted-key) dump; embedded in every output file.
std::string config_digest(const RunConfig& cfg);

// condition string ("natural" or an attack kind token) -> kind
AttackKind condition_from_name(std::string_view name);
const char* condition_name(AttackKind kind);

// assembled pieces
Environment make_environment(const RunConfig& cfg,
                             const std::filesystem::path& base_dir = {});
AttackBudget make_budget(const RunConfig& cfg);
AttackConfig make_attack_config(const RunConfig& cfg);

}  // namespace hevrl
