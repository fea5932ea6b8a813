#include "hevrl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hevrl {

int Tape::push(Node node) {
  node.voff = arena_v_.size();
  node.goff = arena_g_.size();
  arena_v_.resize(arena_v_.size() + static_cast<std::size_t>(node.n), 0.0);
  arena_g_.resize(arena_g_.size() + static_cast<std::size_t>(node.n), 0.0);
  nodes_.push_back(node);
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(std::span<const double> v, bool requires_grad) {
  return leaf_matrix(v, 1, static_cast<int>(v.size()), requires_grad);
}

int Tape::leaf_matrix(std::span<const double> v, int rows, int cols, bool requires_grad) {
  if (rows * cols != static_cast<int>(v.size())) throw std::invalid_argument("leaf shape mismatch");
  Node n;
  n.op = Op::kLeaf;
  n.n = static_cast<int>(v.size());
  n.rows = rows;
  n.cols = cols;
  n.needs_grad = requires_grad;
  const int id = push(n);
  std::copy(v.begin(), v.end(), val_ptr(id));
  return id;
}

int Tape::constant(double v) { return leaf(std::span<const double>(&v, 1), false); }

namespace {
void check_same_size(int na, int nb) {
  if (na != nb) throw std::invalid_argument("tape op size mismatch");
}
}  // namespace

int Tape::matvec(int w, int x) {
  const Node& wn = nodes_[static_cast<std::size_t>(w)];
  const Node& xn = nodes_[static_cast<std::size_t>(x)];
  if (wn.cols != xn.n) throw std::invalid_argument("matvec shape mismatch");
  Node n;
  n.op = Op::kMatVec;
  n.a = w;
  n.b = x;
  n.n = wn.rows;
  n.needs_grad = wn.needs_grad || xn.needs_grad;
  const int id = push(n);
  const double* wp = val_ptr(w);
  const double* xp = val_ptr(x);
  double* out = val_ptr(id);
  for (int i = 0; i < wn.rows; ++i) {
    double acc = 0.0;
    const double* row = wp + static_cast<std::size_t>(i) * wn.cols;
    for (int j = 0; j < wn.cols; ++j) acc += row[j] * xp[j];
    out[i] = acc;
  }
  return id;
}

#define HEVRL_BINARY_OP(NAME, OPK, EXPR)                                         \
  int Tape::NAME(int a, int b) {                                                 \
    const Node& an = nodes_[static_cast<std::size_t>(a)];                        \
    const Node& bn = nodes_[static_cast<std::size_t>(b)];                        \
    check_same_size(an.n, bn.n);                                                 \
    Node n;                                                                      \
    n.op = OPK;                                                                  \
    n.a = a;                                                                     \
    n.b = b;                                                                     \
    n.n = an.n;                                                                  \
    n.needs_grad = an.needs_grad || bn.needs_grad;                               \
    const int id = push(n);                                                      \
    const double* pa = val_ptr(a);                                               \
    const double* pb = val_ptr(b);                                               \
    double* out = val_ptr(id);                                                   \
    for (int i = 0; i < n.n; ++i) out[i] = EXPR;                                 \
    return id;                                                                   \
  }

HEVRL_BINARY_OP(add, Op::kAdd, pa[i] + pb[i])
HEVRL_BINARY_OP(sub, Op::kSub, pa[i] - pb[i])
HEVRL_BINARY_OP(mul, Op::kMul, pa[i] * pb[i])
HEVRL_BINARY_OP(minimum, Op::kMin, std::min(pa[i], pb[i]))
#undef HEVRL_BINARY_OP

#define HEVRL_UNARY_OP(NAME, OPK, EXPR)                                          \
  int Tape::NAME(int a) {                                                        \
    const Node& an = nodes_[static_cast<std::size_t>(a)];                        \
    Node n;                                                                      \
    n.op = OPK;                                                                  \
    n.a = a;                                                                     \
    n.n = an.n;                                                                  \
    n.needs_grad = an.needs_grad;                                                \
    const int id = push(n);                                                      \
    const double* pa = val_ptr(a);                                               \
    double* out = val_ptr(id);                                                   \
    for (int i = 0; i < n.n; ++i) out[i] = EXPR;                                 \
    return id;                                                                   \
  }

HEVRL_UNARY_OP(neg, Op::kNeg, -pa[i])
HEVRL_UNARY_OP(tanh_, Op::kTanh, std::tanh(pa[i]))
HEVRL_UNARY_OP(exp_, Op::kExp, std::exp(pa[i]))
HEVRL_UNARY_OP(log_, Op::kLog, std::log(pa[i]))
#undef HEVRL_UNARY_OP

int Tape::scale(int a, double k) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.n = an.n;
  n.k = k;
  n.needs_grad = an.needs_grad;
  const int id = push(n);
  const double* pa = val_ptr(a);
  double* out = val_ptr(id);
  for (int i = 0; i < n.n; ++i) out[i] = k * pa[i];
  return id;
}

int Tape::add_const(int a, double k) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  Node n;
  n.op = Op::kAddConst;
  n.a = a;
  n.n = an.n;
  n.k = k;
  n.needs_grad = an.needs_grad;
  const int id = push(n);
  const double* pa = val_ptr(a);
  double* out = val_ptr(id);
  for (int i = 0; i < n.n; ++i) out[i] = pa[i] + k;
  return id;
}

int Tape::clamp_(int a, double lo, double hi) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  Node n;
  n.op = Op::kClamp;
  n.a = a;
  n.n = an.n;
  n.k = lo;
  n.k2 = hi;
  n.needs_grad = an.needs_grad;
  const int id = push(n);
  const double* pa = val_ptr(a);
  double* out = val_ptr(id);
  for (int i = 0; i < n.n; ++i) out[i] = std::clamp(pa[i], lo, hi);
  return id;
}

int Tape::sum(int a) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.n = 1;
  n.needs_grad = an.needs_grad;
  const int id = push(n);
  const double* pa = val_ptr(a);
  double acc = 0.0;
  for (int i = 0; i < an.n; ++i) acc += pa[i];
  *val_ptr(id) = acc;
  return id;
}

int Tape::dot(int a, int b) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  const Node& bn = nodes_[static_cast<std::size_t>(b)];
  check_same_size(an.n, bn.n);
  Node n;
  n.op = Op::kDot;
  n.a = a;
  n.b = b;
  n.n = 1;
  n.needs_grad = an.needs_grad || bn.needs_grad;
  const int id = push(n);
  const double* pa = val_ptr(a);
  const double* pb = val_ptr(b);
  double acc = 0.0;
  for (int i = 0; i < an.n; ++i) acc += pa[i] * pb[i];
  *val_ptr(id) = acc;
  return id;
}

int Tape::concat(int a, int b) {
  const Node& an = nodes_[static_cast<std::size_t>(a)];
  const Node& bn = nodes_[static_cast<std::size_t>(b)];
  Node n;
  n.op = Op::kConcat;
  n.a = a;
  n.b = b;
  n.n = an.n + bn.n;
  n.needs_grad = an.needs_grad || bn.needs_grad;
  const int id = push(n);
  double* out = val_ptr(id);
  std::copy(val_ptr(a), val_ptr(a) + an.n, out);
  std::copy(val_ptr(b), val_ptr(b) + bn.n, out + an.n);
  return id;
}

void Tape::backward(int root) {
  const Node& rn = nodes_[static_cast<std::size_t>(root)];
  if (rn.n != 1) throw std::invalid_argument("backward needs a scalar root");
  std::fill(arena_g_.begin(), arena_g_.end(), 0.0);
  *grad_ptr(root) = 1.0;

  for (int id = root; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.op == Op::kLeaf) continue;
    const double* g = grad_ptr(id);
    const double* v = val_ptr(id);
    const Node* an = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
    const Node* bn = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
    double* ga = n.a >= 0 ? grad_ptr(n.a) : nullptr;
    double* gb = n.b >= 0 ? grad_ptr(n.b) : nullptr;
    const double* va = n.a >= 0 ? val_ptr(n.a) : nullptr;
    const double* vb = n.b >= 0 ? val_ptr(n.b) : nullptr;

    switch (n.op) {
      case Op::kMatVec: {
        // a: matrix, b: vector
        const int rows = an->rows, cols = an->cols;
        if (an->needs_grad) {
          for (int i = 0; i < rows; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            double* grow = ga + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) grow[j] += gi * vb[j];
          }
        }
        if (bn->needs_grad) {
          for (int i = 0; i < rows; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            const double* row = va + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) gb[j] += gi * row[j];
          }
        }
        break;
      }
      case Op::kAdd:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i];
        if (bn->needs_grad)
          for (int i = 0; i < n.n; ++i) gb[i] += g[i];
        break;
      case Op::kSub:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i];
        if (bn->needs_grad)
          for (int i = 0; i < n.n; ++i) gb[i] -= g[i];
        break;
      case Op::kMul:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i] * vb[i];
        if (bn->needs_grad)
          for (int i = 0; i < n.n; ++i) gb[i] += g[i] * va[i];
        break;
      case Op::kNeg:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] -= g[i];
        break;
      case Op::kScale:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += n.k * g[i];
        break;
      case Op::kAddConst:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i];
        break;
      case Op::kTanh:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i] * (1.0 - v[i] * v[i]);
        break;
      case Op::kExp:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i] * v[i];
        break;
      case Op::kLog:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i) ga[i] += g[i] / va[i];
        break;
      case Op::kSum:
        if (an->needs_grad)
          for (int i = 0; i < an->n; ++i) ga[i] += g[0];
        break;
      case Op::kDot:
        if (an->needs_grad)
          for (int i = 0; i < an->n; ++i) ga[i] += g[0] * vb[i];
        if (bn->needs_grad)
          for (int i = 0; i < an->n; ++i) gb[i] += g[0] * va[i];
        break;
      case Op::kConcat:
        if (an->needs_grad)
          for (int i = 0; i < an->n; ++i) ga[i] += g[i];
        if (bn->needs_grad)
          for (int i = 0; i < bn->n; ++i) gb[i] += g[an->n + i];
        break;
      case Op::kMin:
        for (int i = 0; i < n.n; ++i) {
          if (va[i] <= vb[i]) {
            if (an->needs_grad) ga[i] += g[i];
          } else if (bn->needs_grad) {
            gb[i] += g[i];
          }
        }
        break;
      case Op::kClamp:
        if (an->needs_grad)
          for (int i = 0; i < n.n; ++i)
            if (va[i] >= n.k && va[i] <= n.k2) ga[i] += g[i];
        break;
      case Op::kLeaf:
        break;
    }
  }
}

std::span<const double> Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {val_ptr(id), static_cast<std::size_t>(n.n)};
}

std::span<const double> Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {grad_ptr(id), static_cast<std::size_t>(n.n)};
}

void Tape::reset() {
  nodes_.clear();
  arena_v_.clear();
  arena_g_.clear();
}

}  // namespace hevrl
