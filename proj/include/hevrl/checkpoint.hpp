#pragma once

#include <filesystem>
#include <string>

#include "hevrl/trainer.hpp"

namespace hevrl {

// Self-describing JSON checkpoint: magic header, network shapes and flat
// parameters, optimizer moments, Lagrange multiplier, RNG states and the
// epoch counter. Doubles round-trip exactly through the JSON encoding.
struct Checkpoint {
  static constexpr const char* kFormat = "hevrl-checkpoint";
  static constexpr int kVersion = 1;

  std::string method;
  std::string config_digest;
  int epochs_completed = 0;
  TrainerNets nets;
  LagrangianState lagrangian;
  OptimStates optim;
  RngSnapshot rng_policy, rng_attack;
};

Checkpoint checkpoint_from_result(const TrainResult& result, const std::string& config_digest);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hevrl
