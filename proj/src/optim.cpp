#include "hevrl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hevrl {

void AdamState::ensure_size(std::size_t n) {
  if (m.empty()) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  if (m.size() != n) throw std::invalid_argument("Adam state size mismatch");
}

namespace {
void check(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("param/grad size mismatch");
  for (double g : grads) {
    if (std::isnan(g)) throw std::runtime_error("NaN gradient");
  }
}
}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  check(params, grads);
  state.ensure_size(params.size());
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  check(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("Polyak size mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("Polyak tau must be in (0,1]");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
  }
}

}  // namespace hevrl
