/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "oracles.hpp"
#include "spherecast/tape.hpp"

using namespace spherecast;
namespace orc = spherecast::oracles;

namespace {

// Finite-difference check of d(loss)/d(leaf) for a program built by `prog`.
// The loss is sum(c .* out) with fixed random weights, so gradients are
// well-scaled.
void check_leaf_gradient(const std::function<Var(Tape&, Var)>& prog, int rows, int cols, uint64_t seed,
                         double rtol = 2e-6) {
  Rng rng(seed);
  Tensor x0 = orc::random_tensor(rng, rows, cols);
  Tape t0;
  Var leaf0 = t0.leaf(x0, true);
  Var out0 = prog(t0, leaf0);
  Tensor weights = orc::random_tensor(rng, t0.val(out0).rows, t0.val(out0).cols);

  auto loss_at = [&](const Tensor& x) {
    Tape t;
    t.set_recording(false);
    Var out = prog(t, t.leaf(x, false));
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) acc += weights.data[i] * t.val(out).data[i];
    return acc;
  };

  Tape t;
  Var leaf = t.leaf(x0, true);
  Var out = prog(t, leaf);
  Var loss = t.sum(t.mul(out, t.leaf(weights, false)));
  t.backward(loss);
  const Tensor& grad = t.grad(leaf);

  const double eps = 1e-6;
  for (size_t i = 0; i < x0.size(); ++i) {
    Tensor xp = x0, xm = x0;
    xp.data[i] += eps;
    xm.data[i] -= eps;
    const double fd = (loss_at(xp) - loss_at(xm)) / (2.0 * eps);
    CHECK_MESSAGE(orc::close(grad.data[i], fd, rtol, 1e-8), "element ", i, ": ad=", grad.data[i], " fd=", fd);
  }
}

}  // namespace

TEST_CASE("elementwise op gradients match finite differences") {
  check_leaf_gradient([](Tape& t, Var x) { return t.add(x, t.scale(x, 2.0)); }, 3, 4, 1);
  check_leaf_gradient([](Tape& t, Var x) { return t.sub(t.mul(x, x), x); }, 3, 4, 2);
  check_leaf_gradient([](Tape& t, Var x) { return t.add_scaled(x, t.mul(x, x), -0.7); }, 2, 5, 3);
  check_leaf_gradient([](Tape& t, Var x) { return t.affine(x, 1.3, -0.2); }, 4, 2, 4);
  check_leaf_gradient([](Tape& t, Var x) { return t.leaky_relu(x, 0.01); }, 4, 4, 5);
  check_leaf_gradient([](Tape& t, Var x) { return t.smooth_clamp(x, 0.8); }, 4, 4, 6);
  check_leaf_gradient([](Tape& t, Var x) { return t.row_mul(x, {0.5, -1.5, 2.0}); }, 3, 4, 7);
  check_leaf_gradient([](Tape& t, Var x) { return t.mean(t.square(x)); }, 3, 3, 8);
}

TEST_CASE("shape and indexing op gradients match finite differences") {
  check_leaf_gradient([](Tape& t, Var x) { return t.reshape(t.slice_cols(x, 1, 2), 2, 3); }, 3, 4, 10);
  check_leaf_gradient(
      [](Tape& t, Var x) {
        const Var parts[] = {x, t.mul(x, x)};
        return t.concat_cols(parts);
      },
      3, 2, 11);
  check_leaf_gradient([](Tape& t, Var x) { return t.gather_rows(x, {2, 0, 1, 2, 2}); }, 3, 3, 12);
  check_leaf_gradient([](Tape& t, Var x) { return t.scatter_add_rows(x, {1, 0, 1, 3}, 4); }, 4, 2, 13);
}

TEST_CASE("dense layer gradients match finite differences") {
  Rng rng(20);
  const Tensor w0 = orc::random_tensor(rng, 4, 3);
  const Tensor b0 = orc::random_tensor(rng, 1, 3);
  check_leaf_gradient(
      [&](Tape& t, Var x) { return t.add_bias(t.matmul(x, t.leaf(w0, false)), t.leaf(b0, false)); }, 5, 4, 21);
  // Gradient with respect to the weight matrix as well.
  Tensor x0 = orc::random_tensor(rng, 5, 4);
  check_leaf_gradient(
      [&](Tape& t, Var w) { return t.matmul(t.leaf(x0, false), w); }, 4, 3, 22);
}

TEST_CASE("sparse product gradients match finite differences") {
  CsrMatrix m;
  m.n = 4;
  m.row_ptr = {0, 2, 4, 6, 8};
  m.col = {0, 1, 1, 2, 2, 3, 3, 0};
  m.val = {0.5, 0.25, 0.7, 0.1, -0.4, 0.9, 0.3, 0.2};
  check_leaf_gradient([&](Tape& t, Var x) { return t.spmm(m, x); }, 4, 3, 30);
}

TEST_CASE("grid stencil gradients match finite differences") {
  auto g = Grid::regular(5, 6);
  check_leaf_gradient([&](Tape& t, Var x) { return t.dd_theta(x, g); }, 5, 6, 40);
  check_leaf_gradient([&](Tape& t, Var x) { return t.dd_phi(x, g); }, 5, 6, 41);
  // Composition mirroring the advective-derivative shape.
  check_leaf_gradient([&](Tape& t, Var x) { return t.mul(x, t.dd_phi(t.mul(x, x), g)); }, 5, 6, 42);
}

TEST_CASE("clamp gradient uses the open-interval subgradient") {
  Tensor x(1, 5);
  x.data = {-2.0, -0.5, 0.0, 0.5, 2.0};
  Tape t;
  Var leaf = t.leaf(x, true);
  Var out = t.clamp(leaf, -1.0, 1.0);
  t.backward(t.sum(out));
  const Tensor& g = t.grad(leaf);
  CHECK(g.data[0] == 0.0);  // saturated low
  CHECK(g.data[1] == 1.0);
  CHECK(g.data[2] == 1.0);
  CHECK(g.data[3] == 1.0);
  CHECK(g.data[4] == 0.0);  // saturated high
  // Values clip.
  CHECK(t.val(out).data[0] == -1.0);
  CHECK(t.val(out).data[4] == 1.0);
}

TEST_CASE("backward accumulates through shared subexpressions") {
  // loss = sum(x*x + x) -> d/dx = 2x + 1
  Tensor x0(2, 2);
  x0.data = {0.5, -1.0, 2.0, 0.0};
  Tape t;
  Var x = t.leaf(x0, true);
  Var loss = t.sum(t.add(t.mul(x, x), x));
  t.backward(loss);
  for (size_t i = 0; i < x0.size(); ++i) CHECK(t.grad(x).data[i] == doctest::Approx(2.0 * x0.data[i] + 1.0));
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Rng rng(77);
    Tape t;
    Var x = t.leaf(orc::random_tensor(rng, 6, 6), true);
    auto g = Grid::regular(6, 6);
    Var y = t.mul(t.dd_phi(x, g), t.dd_theta(x, g));
    t.backward(t.sum(y));
    return t.grad(x);
  };
  const Tensor a = run();
  const Tensor b = run();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("recording off computes identical values and skips gradients") {
  Rng rng(9);
  Tensor x0 = orc::random_tensor(rng, 4, 4);
  auto g = Grid::regular(4, 4);
  Tape rec, inf;
  inf.set_recording(false);
  Var a = rec.mul(rec.dd_phi(rec.leaf(x0, true), g), rec.leaf(x0, true));
  Var b = inf.mul(inf.dd_phi(inf.leaf(x0, true), g), inf.leaf(x0, true));
  for (size_t i = 0; i < x0.size(); ++i) CHECK(rec.val(a).data[i] == inf.val(b).data[i]);
  CHECK_THROWS_AS(inf.backward(inf.sum(b)), NumericError);
}
