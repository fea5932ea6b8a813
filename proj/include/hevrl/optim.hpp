#pragma once

#include <span>
#include <vector>

namespace hevrl {

struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  void ensure_size(std::size_t n);
};

// Standard Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) with bias correction.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

// target <- (1 - tau) * target + tau * online
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

}  // namespace hevrl
