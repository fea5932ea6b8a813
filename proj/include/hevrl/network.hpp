#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hevrl/rng.hpp"
#include "hevrl/tensor.hpp"

namespace hevrl {

// Dense MLP, tanh on hidden layers, linear output. Parameters live in one
// flat vector (per layer: row-major weight, then bias) so optimizers,
// Polyak updates and checkpoints all work on a single span.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);  // zero-initialized parameters

  // Orthogonal rows scaled by sqrt(2) on hidden layers and by output_gain on
  // the last layer; zero biases.
  static Mlp init(std::vector<int> sizes, Rng& rng, double output_gain = 1.0);

  std::vector<double> forward(std::span<const double> x) const;

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<const double> weight(int layer) const;
  std::span<const double> bias(int layer) const;
  std::span<double> weight(int layer);
  std::span<double> bias(int layer);
  int rows(int layer) const { return sizes_[static_cast<std::size_t>(layer) + 1]; }
  int cols(int layer) const { return sizes_[static_cast<std::size_t>(layer)]; }

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<int> w_off_, b_off_;
};

// Tape bindings for one network: a leaf per weight matrix and bias.
struct MlpVars {
  std::vector<int> w_ids, b_ids;
};

MlpVars bind(Tape& tape, const Mlp& net, bool requires_grad);
int forward_on_tape(Tape& tape, const Mlp& net, const MlpVars& vars, int x);

// Adds the tape gradients of bound parameters into flat_grad (same layout as
// Mlp::params()).
void accumulate_param_grads(const Tape& tape, const Mlp& net, const MlpVars& vars,
                            std::span<double> flat_grad);

// Exact reverse-mode gradient of a scalar-output network w.r.t. its input.
std::vector<double> grad_wrt_input(const Mlp& net, std::span<const double> x);

// Reverse-mode parameter gradient of a scalar loss built on the tape from the
// bound network. Returns the loss value; grad_out must have params() size.
using LossBuilder = std::function<int(Tape&, const MlpVars&)>;
double grad_wrt_params(const Mlp& net, const LossBuilder& build_loss, std::span<double> grad_out);

}  // namespace hevrl
