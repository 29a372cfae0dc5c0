#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "involute/linalg.hpp"

namespace involute {

enum class ActivationKind { identity, sigmoid, tanh, relu, swish, softplus, snake };

const char* to_string(ActivationKind kind);
ActivationKind activation_from_string(std::string_view name);
std::span<const ActivationKind> all_activations();

// Scalar activation with first and second derivatives. relu'(0) is 0.
double activate(ActivationKind kind, double z);
double activate_derivative(ActivationKind kind, double z);
double activate_second_derivative(ActivationKind kind, double z);

struct DenseLayer {
  Matrix W;  // out × in
  Vector b;  // out
  ActivationKind act = ActivationKind::identity;

  std::size_t in() const noexcept { return W.cols(); }
  std::size_t out() const noexcept { return W.rows(); }
  std::size_t param_count() const noexcept { return W.data().size() + b.size(); }
};

// Values kept by forward() for the reverse pass. inputs[i] and pre[i] belong
// to layer first_layer + i.
struct ForwardCache {
  std::size_t first_layer = 0;
  std::vector<Vector> inputs;
  std::vector<Vector> pre;
};

// Feed-forward stack of dense layers. Parameters are flattened layer by
// layer as W (row-major) followed by b.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // widths = {in, h1, …, out}; hidden layers use `hidden`, the last `output`.
  static Mlp xavier(std::span<const std::size_t> widths, ActivationKind hidden,
                    ActivationKind output, std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }

  std::size_t param_count() const;
  std::size_t param_offset(std::size_t layer) const;
  Vector parameters() const;
  void set_parameters(std::span<const double> params);

  // Runs layers [first_layer, depth). x must match that layer's input width.
  Vector forward(std::span<const double> x, ForwardCache* cache = nullptr,
                 std::size_t first_layer = 0) const;
  double forward_scalar(std::span<const double> x) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Reverse accumulation: adds ∂L/∂θ (given ∂L/∂y) into grad, which spans the
// full parameter vector of net, and returns ∂L/∂(input of cache.first_layer).
Vector backward(const Mlp& net, const ForwardCache& cache, std::span<const double> dy,
                std::span<double> grad);

// ∇ₓ net(x) for a scalar-output net.
Vector input_gradient(const Mlp& net, std::span<const double> x);

// For a scalar-output net, adds scale·∂/∂θ[rᵀ∇ₓnet(x)] into grad and returns
// ∇ₓnet(x). Forward tangent pass along r followed by reverse accumulation
// through both the primal and tangent values.
Vector directional_backward(const Mlp& net, std::span<const double> x,
                            std::span<const double> r, std::span<double> grad,
                            double scale = 1.0);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Vector m;
  Vector v;

  AdamState() = default;
  AdamState(std::size_t params, double learning_rate);
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

double mse_loss(std::span<const double> pred, std::span<const double> target);

// Uniform Glorot draws in ±√(6/(fan_in+fan_out)).
Matrix init_xavier(std::size_t rows, std::size_t cols, std::uint64_t seed);
Matrix init_xavier(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences, one coordinate at a time.
Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h = 1e-5);

struct TrainConfig {
  std::size_t epochs = 5000;
  double lr = 0.005;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{10, 10};
  ActivationKind activation = ActivationKind::sigmoid;
  double noise_std = 0.25;
};

void to_json(nlohmann::json& j, const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace involute
