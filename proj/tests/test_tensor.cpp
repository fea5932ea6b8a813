#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hevrl/tensor.hpp"

using namespace hevrl;

TEST_CASE("tape forward values") {
  Tape tape;
  const std::vector<double> xv = {1.0, 2.0, 3.0};
  const std::vector<double> wv = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};  // 2x3
  const int x = tape.leaf(xv, true);
  const int w = tape.leaf_matrix(wv, 2, 3, false);
  const int y = tape.matvec(w, x);
  CHECK(tape.value(y)[0] == 1.0);
  CHECK(tape.value(y)[1] == 2.0);

  const int s = tape.sum(tape.mul(y, y));
  CHECK(tape.value(s)[0] == 5.0);
  tape.backward(s);
  // d/dx of (x0^2 + x1^2) = (2x0, 2x1, 0)
  CHECK(tape.grad(x)[0] == 2.0);
  CHECK(tape.grad(x)[1] == 4.0);
  CHECK(tape.grad(x)[2] == 0.0);
}

TEST_CASE("tape min and clamp route gradients to the active branch") {
  Tape tape;
  const std::vector<double> av = {1.0, 5.0};
  const std::vector<double> bv = {2.0, 3.0};
  const int a = tape.leaf(av, true);
  const int b = tape.leaf(bv, true);
  const int m = tape.minimum(a, b);
  CHECK(tape.value(m)[0] == 1.0);
  CHECK(tape.value(m)[1] == 3.0);
  tape.backward(tape.sum(m));
  CHECK(tape.grad(a)[0] == 1.0);
  CHECK(tape.grad(a)[1] == 0.0);
  CHECK(tape.grad(b)[0] == 0.0);
  CHECK(tape.grad(b)[1] == 1.0);

  tape.reset();
  const std::vector<double> cv = {-2.0, 0.5, 7.0};
  const int c = tape.leaf(cv, true);
  const int cl = tape.clamp_(c, -1.0, 1.0);
  CHECK(tape.value(cl)[0] == -1.0);
  CHECK(tape.value(cl)[1] == 0.5);
  CHECK(tape.value(cl)[2] == 1.0);
  tape.backward(tape.sum(cl));
  CHECK(tape.grad(c)[0] == 0.0);
  CHECK(tape.grad(c)[1] == 1.0);
  CHECK(tape.grad(c)[2] == 0.0);
}

TEST_CASE("tape gradients match finite differences on a composite expression") {
  auto eval = [](const std::vector<double>& xv, std::vector<double>* grad) {
    Tape tape;
    const int x = tape.leaf(xv, true);
    // f(x) = sum(tanh(x) * exp(-x)) + log(1 + dot(x, x)) approximated with ops
    const int t = tape.mul(tape.tanh_(x), tape.exp_(tape.neg(x)));
    const int d = tape.add_const(tape.dot(x, x), 1.0);
    const int f = tape.add(tape.sum(t), tape.log_(d));
    tape.backward(f);
    if (grad) {
      auto g = tape.grad(x);
      grad->assign(g.begin(), g.end());
    }
    return tape.value(f)[0];
  };

  const std::vector<double> x0 = {0.3, -0.8, 1.7};
  std::vector<double> grad;
  eval(x0, &grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    std::vector<double> xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (eval(xp, nullptr) - eval(xm, nullptr)) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("backward requires a scalar root") {
  Tape tape;
  const std::vector<double> xv = {1.0, 2.0};
  const int x = tape.leaf(xv, true);
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}
