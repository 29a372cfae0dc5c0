#include <cmath>
#include <random>

#include "doctest.h"
#include "involute/error.hpp"
#include "involute/nn.hpp"
#include "oracles.hpp"

using namespace involute;

namespace {

Mlp random_net(std::uint64_t seed, ActivationKind act, std::size_t in = 3, std::size_t out = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> w(2, 6);
  std::vector<std::size_t> widths{in, w(rng), w(rng), out};
  Mlp net = Mlp::xavier(widths, act, ActivationKind::identity, seed);
  // nonzero biases so every activation is exercised away from 0
  Vector p = net.parameters();
  std::normal_distribution<double> n(0.0, 0.5);
  for (double& v : p) v += 0.3 * n(rng);
  net.set_parameters(p);
  return net;
}

}  // namespace

TEST_CASE("activation names round-trip") {
  for (ActivationKind k : all_activations()) CHECK(activation_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(activation_from_string("gelu"), ConfigError);
}

TEST_CASE("activation derivatives match finite differences") {
  for (ActivationKind k : all_activations()) {
    for (double z = -4.1; z <= 4.1; z += 0.37) {
      if (k == ActivationKind::relu && std::fabs(z) < 1e-3) continue;
      const double h = 1e-5;
      const double d1 = (activate(k, z + h) - activate(k, z - h)) / (2 * h);
      const double d2 = (activate_derivative(k, z + h) - activate_derivative(k, z - h)) / (2 * h);
      CHECK(oracle::rel_err(activate_derivative(k, z), d1) <= 1e-7);
      CHECK(oracle::rel_err(activate_second_derivative(k, z), d2) <= 1e-6);
    }
  }
  CHECK(activate_derivative(ActivationKind::relu, 0.0) == 0.0);
  CHECK(activate(ActivationKind::snake, 1.0) == 1.0 + std::sin(1.0));
  CHECK(std::isfinite(activate(ActivationKind::softplus, 800.0)));
  CHECK(activate(ActivationKind::sigmoid, -800.0) >= 0.0);
}

TEST_CASE("sigmoid complement") {
  for (int i = 0; i < 1000; ++i) {
    const double z = -20.0 + 40.0 * i / 999.0;
    CHECK(std::fabs(activate(ActivationKind::sigmoid, z) + activate(ActivationKind::sigmoid, -z) - 1.0) <= 1e-12);
  }
}

TEST_CASE("parameter and input gradients match finite differences") {
  std::mt19937_64 rng(77);
  for (ActivationKind k : all_activations()) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Mlp net = random_net(100 * static_cast<std::uint64_t>(k) + s, k);
      const Vector x = oracle::gaussian_vec(3, rng);
      ForwardCache cache;
      net.forward(x, &cache);
      Vector grad(net.param_count(), 0.0);
      const double one = 1.0;
      const Vector dx = backward(net, cache, std::span<const double>(&one, 1), grad);

      const Vector p0 = net.parameters();
      const ScalarFunction f_theta = [&](std::span<const double> p) {
        Mlp copy = net;
        copy.set_parameters(p);
        return copy.forward_scalar(x);
      };
      const ScalarFunction f_x = [&](std::span<const double> xx) { return net.forward_scalar(xx); };
      // relu kinks make central differences unreliable only within h of a kink
      const double tol = k == ActivationKind::relu ? 1e-4 : 1e-5;
      CHECK(oracle::max_rel_err(grad, finite_diff_grad(f_theta, p0)) <= tol);
      CHECK(oracle::max_rel_err(dx, finite_diff_grad(f_x, x)) <= tol);
      CHECK(oracle::max_rel_err(input_gradient(net, x), dx, 1e-12) <= 1e-12);
    }
  }
}

TEST_CASE("vector-output backward matches finite differences") {
  const Mlp net = random_net(5, ActivationKind::tanh, 2, 3);
  const Vector x{0.3, -0.7};
  const Vector dy{0.5, -1.0, 2.0};
  ForwardCache cache;
  net.forward(x, &cache);
  Vector grad(net.param_count(), 0.0);
  backward(net, cache, dy, grad);
  const ScalarFunction f = [&](std::span<const double> p) {
    Mlp copy = net;
    copy.set_parameters(p);
    const Vector y = copy.forward(x);
    return dot(y, dy);
  };
  CHECK(oracle::max_rel_err(grad, finite_diff_grad(f, net.parameters())) <= 1e-6);
}

TEST_CASE("forward from an intermediate layer") {
  const Mlp net = random_net(3, ActivationKind::sigmoid);
  const Vector x{0.1, 0.2, 0.3};
  const DenseLayer& l0 = net.layer(0);
  Vector h = matvec(l0.W, x);
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = activate(l0.act, h[k] + l0.b[k]);
  CHECK(net.forward(h, nullptr, 1) == net.forward(x));
}

TEST_CASE("second-order directional gradient matches finite differences") {
  std::mt19937_64 rng(11);
  for (ActivationKind k : {ActivationKind::tanh, ActivationKind::sigmoid, ActivationKind::softplus,
                           ActivationKind::swish, ActivationKind::snake}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Mlp net = random_net(1000 + 37 * s + static_cast<std::uint64_t>(k), k, 2);
      const Vector x = oracle::gaussian_vec(2, rng);
      const Vector r = oracle::gaussian_vec(2, rng);
      Vector grad(net.param_count(), 0.0);
      const Vector gx = directional_backward(net, x, r, grad, 0.5);
      CHECK(oracle::max_rel_err(gx, input_gradient(net, x), 1e-12) <= 1e-12);
      const ScalarFunction f = [&](std::span<const double> p) {
        Mlp copy = net;
        copy.set_parameters(p);
        return 0.5 * dot(r, input_gradient(copy, x));
      };
      CHECK(oracle::max_rel_err(grad, finite_diff_grad(f, net.parameters())) <= 1e-4);
    }
  }
}

TEST_CASE("adam follows the hand recurrence") {
  AdamState st(2, 0.1);
  Vector p{1.0, -2.0};
  const Vector g1{0.5, -1.0}, g2{0.2, 0.4};
  adam_step(st, p, g1);
  // step 1: m̂ = g, v̂ = g², update = lr·g/(|g|+ε)
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1 * 1.0 / (1.0 + 1e-8)).epsilon(1e-15));
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 0.2;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 0.04;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double before = p[0];
  adam_step(st, p, g2);
  CHECK(p[0] == doctest::Approx(before - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-13));
  CHECK(st.step == 2);
  CHECK_THROWS_AS(adam_step(st, p, Vector{1.0}), DimensionMismatch);
}

TEST_CASE("xavier init") {
  const Matrix a = init_xavier(4, 6, 0), b = init_xavier(4, 6, 0), c = init_xavier(4, 6, 1);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const double bound = std::sqrt(6.0 / 10.0);
  for (double v : a.data()) CHECK(std::fabs(v) <= bound);
}

TEST_CASE("mse and finite differences") {
  CHECK(mse_loss(Vector{1, 2}, Vector{1, 4}) == 2.0);
  CHECK_THROWS(mse_loss(Vector{}, Vector{}));
  const ScalarFunction sq = [](std::span<const double> x) { return x[0] * x[0]; };
  CHECK(std::fabs(finite_diff_grad(sq, Vector{3.0})[0] - 6.0) <= 1e-6);
  const ScalarFunction c = [](std::span<const double>) { return 4.0; };
  CHECK(finite_diff_grad(c, Vector{1, 2}) == Vector{0, 0});
}

TEST_CASE("mlp JSON is bit-exact") {
  const Mlp net = random_net(8, ActivationKind::swish);
  nlohmann::json j;
  to_json(j, net);
  const Mlp back = mlp_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.parameters() == net.parameters());
  CHECK(back.layer(0).act == ActivationKind::swish);
  j["layers"][0]["W"] = nlohmann::json::array({1.0});
  CHECK_THROWS(mlp_from_json(j));
}

TEST_CASE("shape checks") {
  Mlp net = random_net(1, ActivationKind::tanh);
  CHECK_THROWS_AS(net.forward(Vector{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(net.set_parameters(Vector{1.0}), DimensionMismatch);
}
