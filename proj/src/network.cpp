#include "hevrl/network.hpp"

#include <cmath>
#include <stdexcept>

namespace hevrl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("MLP needs at least one layer");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("MLP layer sizes must be >= 1");
  }
  int total = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    w_off_.push_back(total);
    total += sizes_[static_cast<std::size_t>(l) + 1] * sizes_[static_cast<std::size_t>(l)];
    b_off_.push_back(total);
    total += sizes_[static_cast<std::size_t>(l) + 1];
  }
  params_.assign(static_cast<std::size_t>(total), 0.0);
}

namespace {

// Orthonormalize the rows (or columns when rows > cols) of a gaussian matrix
// by modified Gram-Schmidt, then scale by gain.
void orthogonal_fill(std::span<double> w, int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  // work on a (small x big) row-orthonormal matrix
  std::vector<double> m(static_cast<std::size_t>(small) * big);
  for (double& x : m) x = rng.gaussian();
  for (int i = 0; i < small; ++i) {
    double* ri = m.data() + static_cast<std::size_t>(i) * big;
    for (int k = 0; k < i; ++k) {
      const double* rk = m.data() + static_cast<std::size_t>(k) * big;
      double proj = 0.0;
      for (int j = 0; j < big; ++j) proj += ri[j] * rk[j];
      for (int j = 0; j < big; ++j) ri[j] -= proj * rk[j];
    }
    double norm = 0.0;
    for (int j = 0; j < big; ++j) norm += ri[j] * ri[j];
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (int j = 0; j < big; ++j) ri[j] /= norm;
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = rows <= cols ? m[static_cast<std::size_t>(i) * big + j]
                                    : m[static_cast<std::size_t>(j) * big + i];
      w[static_cast<std::size_t>(i) * cols + j] = gain * v;
    }
  }
}

}  // namespace

Mlp Mlp::init(std::vector<int> sizes, Rng& rng, double output_gain) {
  Mlp net(std::move(sizes));
  const double hidden_gain = std::sqrt(2.0);
  for (int l = 0; l < net.num_layers(); ++l) {
    const double gain = (l + 1 == net.num_layers()) ? output_gain : hidden_gain;
    orthogonal_fill(net.weight(l), net.rows(l), net.cols(l), gain, rng);
  }
  return net;
}

std::span<const double> Mlp::weight(int layer) const {
  return {params_.data() + w_off_[static_cast<std::size_t>(layer)],
          static_cast<std::size_t>(rows(layer) * cols(layer))};
}
std::span<const double> Mlp::bias(int layer) const {
  return {params_.data() + b_off_[static_cast<std::size_t>(layer)],
          static_cast<std::size_t>(rows(layer))};
}
std::span<double> Mlp::weight(int layer) {
  return {params_.data() + w_off_[static_cast<std::size_t>(layer)],
          static_cast<std::size_t>(rows(layer) * cols(layer))};
}
std::span<double> Mlp::bias(int layer) {
  return {params_.data() + b_off_[static_cast<std::size_t>(layer)],
          static_cast<std::size_t>(rows(layer))};
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw std::invalid_argument("MLP input dimension mismatch");
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (int l = 0; l < num_layers(); ++l) {
    const int r = rows(l), c = cols(l);
    const double* w = weight(l).data();
    const double* b = bias(l).data();
    next.assign(static_cast<std::size_t>(r), 0.0);
    for (int i = 0; i < r; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) acc += row[j] * cur[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = (l + 1 < num_layers()) ? std::tanh(acc) : acc;
    }
    cur.swap(next);
  }
  return cur;
}

MlpVars bind(Tape& tape, const Mlp& net, bool requires_grad) {
  MlpVars vars;
  for (int l = 0; l < net.num_layers(); ++l) {
    vars.w_ids.push_back(tape.leaf_matrix(net.weight(l), net.rows(l), net.cols(l), requires_grad));
    vars.b_ids.push_back(tape.leaf(net.bias(l), requires_grad));
  }
  return vars;
}

int forward_on_tape(Tape& tape, const Mlp& net, const MlpVars& vars, int x) {
  int cur = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    cur = tape.add(tape.matvec(vars.w_ids[static_cast<std::size_t>(l)], cur),
                   vars.b_ids[static_cast<std::size_t>(l)]);
    if (l + 1 < net.num_layers()) cur = tape.tanh_(cur);
  }
  return cur;
}

void accumulate_param_grads(const Tape& tape, const Mlp& net, const MlpVars& vars,
                            std::span<double> flat_grad) {
  if (flat_grad.size() != net.params().size()) {
    throw std::invalid_argument("flat gradient size mismatch");
  }
  std::size_t off = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    for (double g : tape.grad(vars.w_ids[static_cast<std::size_t>(l)])) flat_grad[off++] += g;
    for (double g : tape.grad(vars.b_ids[static_cast<std::size_t>(l)])) flat_grad[off++] += g;
  }
}

std::vector<double> grad_wrt_input(const Mlp& net, std::span<const double> x) {
  if (net.output_dim() != 1) throw std::invalid_argument("grad_wrt_input needs a scalar output");
  Tape tape;
  const int xid = tape.leaf(x, true);
  const MlpVars vars = bind(tape, net, false);
  const int y = forward_on_tape(tape, net, vars, xid);
  tape.backward(y);
  auto g = tape.grad(xid);
  return {g.begin(), g.end()};
}

double grad_wrt_params(const Mlp& net, const LossBuilder& build_loss, std::span<double> grad_out) {
  Tape tape;
  const MlpVars vars = bind(tape, net, true);
  const int loss = build_loss(tape, vars);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) throw std::runtime_error("non-finite loss in grad_wrt_params");
  tape.backward(loss);
  accumulate_param_grads(tape, net, vars, grad_out);
  return value;
}

}  // namespace hevrl
