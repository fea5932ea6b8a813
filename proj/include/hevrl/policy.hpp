#pragma once

#include <span>
#include <vector>

#include "hevrl/network.hpp"
#include "hevrl/rng.hpp"

namespace hevrl {

// Diagonal Gaussian policy with a tanh squash mapping pre-squash samples u
// into actions a = (tanh(u) + 1) / 2 in (0, 1). log_std is a per-dimension
// learnable vector, state-independent, clamped to [-20, 2].
struct GaussianPolicy {
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  Mlp mean;                     // output dim = action dim, linear head
  std::vector<double> log_std;  // one entry per action dim

  static GaussianPolicy init(std::vector<int> sizes, Rng& rng, double log_std_init = -0.5);

  int obs_dim() const { return mean.input_dim(); }
  int action_dim() const { return mean.output_dim(); }

  void clamp_log_std();

  // Deterministic evaluation action: squash of the mean network output.
  std::vector<double> mean_action(std::span<const double> obs) const;

  struct Sample {
    std::vector<double> action;      // squashed, in (0,1)
    std::vector<double> pre_squash;  // gaussian sample u
    double log_prob = 0.0;           // includes the squash correction
  };
  Sample sample(std::span<const double> obs, Rng& rng) const;

  // log-density of a stored pre-squash sample under the current parameters.
  double log_prob(std::span<const double> obs, std::span<const double> pre_squash) const;
};

double squash(double u);
double log_squash_jacobian(double u);  // log |da/du|

// Closed-form diagonal-Gaussian KL(a || b) on the pre-squash distributions at
// one observation.
double kl_divergence(const GaussianPolicy& a, const GaussianPolicy& b, std::span<const double> obs);

}  // namespace hevrl
