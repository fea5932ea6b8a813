#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hevrl {

// Reference speed trace sampled on a uniform grid. Immutable after load;
// safe to share read-only across rollout workers.
struct DriveCycle {
  double timestep_s = 1.0;
  std::vector<double> speeds_mps;  // length num_steps() + 1
  std::string name;

  int num_steps() const { return static_cast<int>(speeds_mps.size()) - 1; }
  void validate() const;  // throws on invariant violation
};

// Loads a two-column CSV (header `time_s,speed_mps` or `time_s,speed_kmh`,
// `#` comment lines ignored) and resamples it to a uniform grid by linear
// interpolation. Speeds are normalized to m/s.
DriveCycle load_cycle(const std::filesystem::path& path, double timestep_s = 1.0);

// Linear-interpolation resampling of an already-valid cycle.
DriveCycle resample(const DriveCycle& cycle, double timestep_s);

// First `steps` transitions of a cycle (speeds truncated to steps + 1).
DriveCycle truncated(const DriveCycle& cycle, int steps);

// Contiguous window of `steps` transitions starting at step `start`.
DriveCycle windowed(const DriveCycle& cycle, int start, int steps);

// Trapezoidal integral of speed over time, in meters.
double cycle_distance(const DriveCycle& cycle);

}  // namespace hevrl
