#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gaunet/numcore.hpp"

using namespace gaunet;

namespace {

const int kTiny[] = {2, 1};
const int kShape[] = {1, 5, 5, 1};

Mlp affine_net(std::vector<double> w, double b) {
  int sizes[] = {static_cast<int>(w.size()), 1};
  Mlp net = make_zero_mlp(sizes, Activation::Identity);
  for (size_t i = 0; i < w.size(); ++i) net.weights[0](0, static_cast<int>(i)) = w[i];
  net.biases[0][0] = b;
  return net;
}

}  // namespace

TEST_CASE("forward: zero net maps anything to zero") {
  Mlp net = make_zero_mlp(kShape, Activation::Tanh);
  double x = 3.7;
  CHECK(mlp_forward(net, std::span<const double>(&x, 1)) == 0.0);
}

TEST_CASE("forward: affine dot product") {
  Mlp net = affine_net({0.5, -0.2}, 0.0);
  std::vector<double> x = {2.0, 5.0};
  CHECK(mlp_forward(net, x) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("forward: single tanh hidden node at zero input") {
  int sizes[] = {1, 1, 1};
  Mlp net = make_zero_mlp(sizes, Activation::Tanh);
  net.weights[0](0, 0) = 1.0;
  net.weights[1](0, 0) = 1.0;
  double x = 0.0;
  CHECK(mlp_forward(net, std::span<const double>(&x, 1)) == 0.0);
}

TEST_CASE("forward: input width mismatch throws") {
  Mlp net = make_zero_mlp(kTiny, Activation::Tanh);
  std::vector<double> x = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(mlp_forward(net, x), std::invalid_argument);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng(11);
  Mlp net = make_mlp(kShape, Activation::Tanh, rng);
  std::vector<double> x = {0.3};
  MlpWorkspace ws;
  mlp_forward(net, x, ws);
  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<double> dx(1, 0.0);
  mlp_backward(net, x, ws, 0.0, grad, dx);
  for (double g : grad) CHECK(g == 0.0);
  CHECK(dx[0] == 0.0);
}

TEST_CASE("backward: affine net gradients are the inputs and weights") {
  Mlp net = affine_net({0.5, -0.2}, 0.0);
  std::vector<double> x = {2.0, 5.0};
  MlpWorkspace ws;
  mlp_forward(net, x, ws);
  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<double> dx(2, 0.0);
  mlp_backward(net, x, ws, 1.0, grad, dx);
  // layout: w00, w01, bias
  CHECK(grad[0] == doctest::Approx(2.0));
  CHECK(grad[1] == doctest::Approx(5.0));
  CHECK(grad[2] == doctest::Approx(1.0));
  CHECK(dx[0] == doctest::Approx(0.5));
  CHECK(dx[1] == doctest::Approx(-0.2));
}

TEST_CASE("backward matches central differences on a random tanh net") {
  Rng rng(42);
  Mlp net = make_mlp(kShape, Activation::Tanh, rng);
  std::vector<double> x = {rng.uniform(-2, 2)};
  CHECK(grad_check(net, x, 1e-5) < 1e-4);
}

TEST_CASE("backward matches central differences for dx as well") {
  Rng rng(7);
  int sizes[] = {3, 5, 1};
  Mlp net = make_mlp(sizes, Activation::Tanh, rng);
  std::vector<double> x = {0.4, -1.1, 0.9};
  MlpWorkspace ws;
  mlp_forward(net, x, ws);
  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<double> dx(3, 0.0);
  mlp_backward(net, x, ws, 1.0, grad, dx);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double numeric = (mlp_forward(net, xp) - mlp_forward(net, xm)) / (2 * h);
    CHECK(dx[i] == doctest::Approx(numeric).epsilon(1e-5));
  }
}

TEST_CASE("grad_check: affine nets are exactly linear") {
  Mlp net = affine_net({0.5, -0.2, 1.3}, 0.7);
  std::vector<double> x = {2.0, 5.0, -1.0};
  CHECK(grad_check(net, x, 1e-5) < 1e-10);
}

TEST_CASE("grad_check: leaky relu away from the kink") {
  Rng rng(3);
  Mlp net = make_mlp(kShape, Activation::LeakyReLU, rng);
  // Nudge biases so no preactivation sits near 0 for this input.
  std::vector<double> x = {1.5};
  for (auto& layer : net.biases)
    for (double& b : layer) b += 0.25;
  MlpWorkspace ws;
  mlp_forward(net, x, ws);
  bool near_kink = false;
  for (const auto& layer : ws.pre)
    for (double p : layer)
      if (std::abs(p) < 1e-2) near_kink = true;
  REQUIRE_FALSE(near_kink);
  CHECK(grad_check(net, x, 1e-5) < 1e-4);
}

TEST_CASE("zero-hidden-layer mlp computes exactly an affine function") {
  Rng rng(19);
  int sizes[] = {4, 1};
  Mlp net = make_mlp(sizes, Activation::Tanh, rng);
  net.biases[0][0] = 0.31;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-5, 5);
    double expect = net.biases[0][0];
    for (int c = 0; c < 4; ++c) expect += net.weights[0](0, c) * x[c];
    CHECK(mlp_forward(net, x) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("adam: zero gradients leave parameters fixed") {
  double p = 1.25;
  double* slot = &p;
  AdamState adam(1, {});
  std::vector<double> g = {0.0};
  for (int i = 0; i < 5; ++i) adam.step(std::span<double* const>(&slot, 1), g);
  CHECK(p == 1.25);
}

TEST_CASE("adam: first bias-corrected step has unit direction") {
  double p = 0.0;
  double* slot = &p;
  AdamState adam(1, {.learning_rate = 0.1});
  std::vector<double> g = {1.0};
  adam.step(std::span<double* const>(&slot, 1), g);
  // mhat = 1, vhat = 1 after correction, so the step is -lr/(1+eps).
  CHECK(p == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam: repeated identical gradients move monotonically") {
  double p = 0.0;
  double* slot = &p;
  AdamState adam(1, {.learning_rate = 0.01});
  std::vector<double> g = {2.5};
  double prev = p;
  for (int i = 0; i < 10; ++i) {
    adam.step(std::span<double* const>(&slot, 1), g);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("adam: non-finite gradient reports the offending index") {
  double a = 0, b = 0;
  double* slots[] = {&a, &b};
  AdamState adam(2, {});
  std::vector<double> g = {0.0, std::nan("")};
  CHECK_THROWS_WITH_AS(adam.step(std::span<double* const>(slots, 2), g),
                       doctest::Contains("index 1"), std::runtime_error);
}

TEST_CASE("adam: shape mismatch throws") {
  double p = 0;
  double* slot = &p;
  AdamState adam(2, {});
  std::vector<double> g = {1.0};
  CHECK_THROWS_AS(adam.step(std::span<double* const>(&slot, 1), g), std::invalid_argument);
}

TEST_CASE("adam: masked slots stay bit-identical") {
  double a = 0.5, b = 0.5;
  double* slots[] = {&a, &b};
  AdamState adam(2, {});
  std::vector<double> g = {1.0, 1.0};
  std::vector<std::uint8_t> mask = {1, 0};
  for (int i = 0; i < 3; ++i) adam.step(std::span<double* const>(slots, 2), g, &mask);
  CHECK(a != 0.5);
  CHECK(b == 0.5);
}

TEST_CASE("gumbel: u = 1/e recovers the location") {
  CHECK(gumbel_from_uniform(1.0 / std::exp(1.0), 3.25, 2.0) == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("gumbel: sample mean approaches the Euler-Mascheroni constant") {
  Rng rng(123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += gumbel_sample(rng, 0.0, 1.0);
  CHECK(sum / n == doctest::Approx(0.5772).epsilon(0).scale(1).epsilon(0.04));
}

TEST_CASE("gumbel: nonpositive scale rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(gumbel_sample(rng, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gumbel_sample(rng, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("rng: identical seeds give identical sequences") {
  Rng a(987654321), b(987654321);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng::substream(5, 0);
  Rng d = Rng::substream(5, 1);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("rng: uniform01 stays inside the open interval") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("make_mlp: seeded init is deterministic and bounded") {
  Rng a(77), b(77);
  Mlp m1 = make_mlp(kShape, Activation::Tanh, a);
  Mlp m2 = make_mlp(kShape, Activation::Tanh, b);
  std::vector<double> p1(m1.param_count()), p2(m2.param_count());
  get_mlp_params(m1, p1);
  get_mlp_params(m2, p2);
  CHECK(p1 == p2);
  for (int l = 0; l < m1.layer_count(); ++l) {
    double s = std::sqrt(6.0 / (m1.layer_sizes[l] + m1.layer_sizes[l + 1]));
    for (double w : m1.weights[l].a) CHECK(std::abs(w) <= s);
    for (double bval : m1.biases[l]) CHECK(bval == 0.0);
  }
}

TEST_CASE("mlp params round-trip through the flat layout") {
  Rng rng(8);
  Mlp net = make_mlp(kShape, Activation::Tanh, rng);
  std::vector<double> p(net.param_count());
  get_mlp_params(net, p);
  Mlp other = make_zero_mlp(kShape, Activation::Tanh);
  set_mlp_params(other, p);
  std::vector<double> q(other.param_count());
  get_mlp_params(other, q);
  CHECK(p == q);
}
