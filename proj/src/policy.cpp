#include "hevrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevrl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
}  // namespace

double squash(double u) { return 0.5 * (std::tanh(u) + 1.0); }

double log_squash_jacobian(double u) {
  // da/du = 0.5 * (1 - tanh(u)^2); log(1 - tanh^2 u) = 2(log 2 - u - softplus(-2u))
  return std::log(0.5) + 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

GaussianPolicy GaussianPolicy::init(std::vector<int> sizes, Rng& rng, double log_std_init) {
  GaussianPolicy p;
  p.mean = Mlp::init(std::move(sizes), rng, 0.01);
  p.log_std.assign(static_cast<std::size_t>(p.mean.output_dim()), log_std_init);
  p.clamp_log_std();
  return p;
}

void GaussianPolicy::clamp_log_std() {
  for (double& v : log_std) v = std::clamp(v, kLogStdMin, kLogStdMax);
}

std::vector<double> GaussianPolicy::mean_action(std::span<const double> obs) const {
  std::vector<double> a = mean.forward(obs);
  for (double& v : a) v = squash(v);
  return a;
}

GaussianPolicy::Sample GaussianPolicy::sample(std::span<const double> obs, Rng& rng) const {
  const std::vector<double> mu = mean.forward(obs);
  Sample out;
  out.pre_squash.resize(mu.size());
  out.action.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    out.pre_squash[i] = mu[i] + sigma * rng.gaussian();
    out.action[i] = squash(out.pre_squash[i]);
  }
  out.log_prob = log_prob(obs, out.pre_squash);
  return out;
}

double GaussianPolicy::log_prob(std::span<const double> obs,
                                std::span<const double> pre_squash) const {
  const std::vector<double> mu = mean.forward(obs);
  if (pre_squash.size() != mu.size()) throw std::invalid_argument("action dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (pre_squash[i] - mu[i]) / sigma;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
    lp -= log_squash_jacobian(pre_squash[i]);
  }
  return lp;
}

double kl_divergence(const GaussianPolicy& a, const GaussianPolicy& b,
                     std::span<const double> obs) {
  if (a.action_dim() != b.action_dim()) throw std::invalid_argument("action dimension mismatch");
  const std::vector<double> mu_a = a.mean.forward(obs);
  const std::vector<double> mu_b = b.mean.forward(obs);
  double kl = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = std::exp(2.0 * a.log_std[i]);
    const double vb = std::exp(2.0 * b.log_std[i]);
    const double dmu = mu_a[i] - mu_b[i];
    kl += b.log_std[i] - a.log_std[i] + (va + dmu * dmu) / (2.0 * vb) - 0.5;
  }
  return kl;
}

}  // namespace hevrl
