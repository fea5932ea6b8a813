#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hevrl {

// Reverse-mode tape over double vectors. Nodes are whole vectors (layer
// activations, parameter matrices), not scalars, so a 256-wide MLP forward is
// a handful of nodes. Values and gradients live in one arena that reset()
// recycles between passes.
//
// Usage: create leaves (requires_grad for anything you want gradients of),
// compose ops, call backward() on a scalar node, then read grad() of leaves.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kMatVec,   // a: matrix (rows x cols), b: vector (cols) -> rows
    kAdd,
    kSub,
    kMul,
    kNeg,
    kScale,    // k * a
    kAddConst, // a + k
    kTanh,
    kExp,
    kLog,
    kSum,      // -> scalar
    kDot,      // -> scalar
    kConcat,
    kMin,      // elementwise min(a, b), grad routed to the smaller side
    kClamp,    // clamp to [k, k2]; grad passes where value is inside
  };

  int leaf(std::span<const double> v, bool requires_grad);
  int leaf_matrix(std::span<const double> v, int rows, int cols, bool requires_grad);
  int constant(double v);

  int matvec(int w, int x);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int neg(int a);
  int scale(int a, double k);
  int add_const(int a, double k);
  int tanh_(int a);
  int exp_(int a);
  int log_(int a);
  int sum(int a);
  int dot(int a, int b);
  int concat(int a, int b);
  int minimum(int a, int b);
  int clamp_(int a, double lo, double hi);

  // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. root must be
  // scalar (size 1). Gradients accumulate; reset() clears them.
  void backward(int root);

  std::span<const double> value(int id) const;
  std::span<const double> grad(int id) const;
  int size(int id) const { return nodes_[static_cast<std::size_t>(id)].n; }

  void reset();

 private:
  struct Node {
    Op op;
    int a = -1, b = -1;
    int n = 0;
    int rows = 0, cols = 0;
    double k = 0.0, k2 = 0.0;
    std::size_t voff = 0, goff = 0;
    bool needs_grad = false;
  };

  int push(Node node);
  double* val_ptr(int id) { return arena_v_.data() + nodes_[static_cast<std::size_t>(id)].voff; }
  double* grad_ptr(int id) { return arena_g_.data() + nodes_[static_cast<std::size_t>(id)].goff; }
  const double* val_ptr(int id) const {
    return arena_v_.data() + nodes_[static_cast<std::size_t>(id)].voff;
  }
  const double* grad_ptr(int id) const {
    return arena_g_.data() + nodes_[static_cast<std::size_t>(id)].goff;
  }

  std::vector<Node> nodes_;
  std::vector<double> arena_v_;
  std::vector<double> arena_g_;
};

}  // namespace hevrl
