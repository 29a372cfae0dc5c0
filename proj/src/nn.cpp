#include "involute/nn.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "involute/error.hpp"

namespace involute {

namespace {

constexpr std::array kAllActivations{
    ActivationKind::identity, ActivationKind::sigmoid,  ActivationKind::tanh,
    ActivationKind::relu,     ActivationKind::swish,    ActivationKind::softplus,
    ActivationKind::snake,
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace

const char* to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::relu: return "relu";
    case ActivationKind::swish: return "swish";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::snake: return "snake";
  }
  return "?";
}

ActivationKind activation_from_string(std::string_view name) {
  for (ActivationKind k : kAllActivations) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::span<const ActivationKind> all_activations() { return kAllActivations; }

double activate(ActivationKind kind, double z) {
  switch (kind) {
    case ActivationKind::identity: return z;
    case ActivationKind::sigmoid: return sigmoid(z);
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::relu: return z > 0.0 ? z : 0.0;
    case ActivationKind::swish: return z * sigmoid(z);
    case ActivationKind::softplus:
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case ActivationKind::snake: return z + std::sin(z);
  }
  return z;
}

double activate_derivative(ActivationKind kind, double z) {
  switch (kind) {
    case ActivationKind::identity: return 1.0;
    case ActivationKind::sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::swish: {
      const double s = sigmoid(z);
      return s + z * s * (1.0 - s);
    }
    case ActivationKind::softplus: return sigmoid(z);
    case ActivationKind::snake: return 1.0 + std::cos(z);
  }
  return 1.0;
}

double activate_second_derivative(ActivationKind kind, double z) {
  switch (kind) {
    case ActivationKind::identity: return 0.0;
    case ActivationKind::sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    case ActivationKind::relu: return 0.0;
    case ActivationKind::swish: {
      const double s = sigmoid(z);
      return s * (1.0 - s) * (2.0 + z * (1.0 - 2.0 * s));
    }
    case ActivationKind::softplus: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case ActivationKind::snake: return -std::sin(z);
  }
  return 0.0;
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    require_len(layers_[i].b.size(), layers_[i].out(), "layer bias");
    if (i > 0 && layers_[i].in() != layers_[i - 1].out()) {
      throw DimensionMismatch("layer " + std::to_string(i) + " expects input width " +
                              std::to_string(layers_[i].in()) + " but previous layer emits " +
                              std::to_string(layers_[i - 1].out()));
    }
  }
}

Mlp Mlp::xavier(std::span<const std::size_t> widths, ActivationKind hidden,
                ActivationKind output, std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("network needs at least input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0) throw ConfigError("layer widths must be positive");
    const bool last = i + 2 == widths.size();
    layers.push_back({init_xavier(widths[i + 1], widths[i], rng), Vector(widths[i + 1], 0.0),
                      last ? output : hidden});
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }

std::size_t Mlp::param_count() const { return param_offset(layers_.size()); }

std::size_t Mlp::param_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < layer && i < layers_.size(); ++i) off += layers_[i].param_count();
  return off;
}

Vector Mlp::parameters() const {
  Vector p;
  p.reserve(param_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.W.data().begin(), l.W.data().end());
    p.insert(p.end(), l.b.begin(), l.b.end());
  }
  return p;
}

void Mlp::set_parameters(std::span<const double> params) {
  require_len(params.size(), param_count(), "set_parameters");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& w : l.W.data()) w = params[k++];
    for (double& b : l.b) b = params[k++];
  }
}

Vector Mlp::forward(std::span<const double> x, ForwardCache* cache,
                    std::size_t first_layer) const {
  if (first_layer >= layers_.size()) throw DimensionMismatch("forward: no layers to run");
  require_len(x.size(), layers_[first_layer].in(), "forward input");
  if (cache) {
    cache->first_layer = first_layer;
    cache->inputs.clear();
    cache->pre.clear();
  }
  Vector a(x.begin(), x.end());
  for (std::size_t i = first_layer; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    Vector z = matvec(l.W, a);
    for (std::size_t r = 0; r < z.size(); ++r) z[r] += l.b[r];
    Vector next(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) next[r] = activate(l.act, z[r]);
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(std::move(z));
    }
    a = std::move(next);
  }
  return a;
}

double Mlp::forward_scalar(std::span<const double> x) const {
  if (output_dim() != 1) throw DimensionMismatch("forward_scalar needs a scalar-output net");
  return forward(x)[0];
}

Vector backward(const Mlp& net, const ForwardCache& cache, std::span<const double> dy,
                std::span<double> grad) {
  require_len(grad.size(), net.param_count(), "gradient buffer");
  const std::size_t count = cache.pre.size();
  if (count == 0 || cache.first_layer + count != net.depth()) {
    throw DimensionMismatch("backward: cache does not match network depth");
  }
  require_len(dy.size(), net.output_dim(), "backward upstream");

  Vector delta(dy.begin(), dy.end());
  for (std::size_t k = count; k-- > 0;) {
    const std::size_t li = cache.first_layer + k;
    const DenseLayer& l = net.layer(li);
    const Vector& z = cache.pre[k];
    const Vector& a_prev = cache.inputs[k];
    if (z.size() != l.out() || a_prev.size() != l.in()) {
      throw DimensionMismatch("backward: stale cache for layer " + std::to_string(li));
    }
    for (std::size_t r = 0; r < z.size(); ++r) delta[r] *= activate_derivative(l.act, z[r]);

    const std::size_t off = net.param_offset(li);
    for (std::size_t r = 0; r < l.out(); ++r) {
      double* gw = grad.data() + off + r * l.in();
      for (std::size_t c = 0; c < l.in(); ++c) gw[c] += delta[r] * a_prev[c];
    }
    const std::size_t boff = off + l.W.data().size();
    for (std::size_t r = 0; r < l.out(); ++r) grad[boff + r] += delta[r];

    delta = matvec_transposed(l.W, delta);
  }
  return delta;
}

Vector input_gradient(const Mlp& net, std::span<const double> x) {
  if (net.output_dim() != 1) throw DimensionMismatch("input_gradient needs a scalar-output net");
  require_len(x.size(), net.input_dim(), "input_gradient input");
  const std::size_t depth = net.depth();
  // Keep σ′(z) per layer; no parameter gradients are needed.
  std::vector<Vector> slope(depth);
  Vector a(x.begin(), x.end());
  for (std::size_t i = 0; i < depth; ++i) {
    const DenseLayer& l = net.layer(i);
    Vector z = matvec(l.W, a);
    slope[i].resize(l.out());
    for (std::size_t k = 0; k < l.out(); ++k) {
      z[k] += l.b[k];
      slope[i][k] = activate_derivative(l.act, z[k]);
      z[k] = activate(l.act, z[k]);
    }
    a = std::move(z);
  }
  Vector delta(1, 1.0);
  for (std::size_t i = depth; i-- > 0;) {
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] *= slope[i][k];
    delta = matvec_transposed(net.layer(i).W, delta);
  }
  return delta;
}

Vector directional_backward(const Mlp& net, std::span<const double> x,
                            std::span<const double> r, std::span<double> grad, double scale) {
  if (net.output_dim() != 1) {
    throw DimensionMismatch("directional_backward needs a scalar-output net");
  }
  require_len(x.size(), net.input_dim(), "directional_backward input");
  require_len(r.size(), net.input_dim(), "directional_backward direction");
  require_len(grad.size(), net.param_count(), "gradient buffer");

  const std::size_t depth = net.depth();
  // Primal (a, z) and tangent (t, zt) values per layer.
  std::vector<Vector> a(depth + 1), t(depth + 1), z(depth), zt(depth);
  a[0].assign(x.begin(), x.end());
  t[0].assign(r.begin(), r.end());
  for (std::size_t i = 0; i < depth; ++i) {
    const DenseLayer& l = net.layer(i);
    z[i] = matvec(l.W, a[i]);
    for (std::size_t k = 0; k < z[i].size(); ++k) z[i][k] += l.b[k];
    zt[i] = matvec(l.W, t[i]);
    a[i + 1].resize(l.out());
    t[i + 1].resize(l.out());
    for (std::size_t k = 0; k < l.out(); ++k) {
      a[i + 1][k] = activate(l.act, z[i][k]);
      t[i + 1][k] = activate_derivative(l.act, z[i][k]) * zt[i][k];
    }
  }

  // The objective is the output tangent; its adjoint seeds the reverse pass.
  Vector bar_a(1, 0.0), bar_t(1, 1.0);
  // Plain input gradient, for the caller.
  Vector delta(1, 1.0);
  for (std::size_t i = depth; i-- > 0;) {
    const DenseLayer& l = net.layer(i);
    Vector bar_z(l.out()), bar_zt(l.out());
    for (std::size_t k = 0; k < l.out(); ++k) {
      const double d1 = activate_derivative(l.act, z[i][k]);
      const double d2 = activate_second_derivative(l.act, z[i][k]);
      bar_z[k] = bar_a[k] * d1 + bar_t[k] * d2 * zt[i][k];
      bar_zt[k] = bar_t[k] * d1;
      delta[k] *= d1;
    }
    const std::size_t off = net.param_offset(i);
    for (std::size_t k = 0; k < l.out(); ++k) {
      double* gw = grad.data() + off + k * l.in();
      for (std::size_t c = 0; c < l.in(); ++c) {
        gw[c] += scale * (bar_z[k] * a[i][c] + bar_zt[k] * t[i][c]);
      }
    }
    const std::size_t boff = off + l.W.data().size();
    for (std::size_t k = 0; k < l.out(); ++k) grad[boff + k] += scale * bar_z[k];

    bar_a = matvec_transposed(l.W, bar_z);
    bar_t = matvec_transposed(l.W, bar_zt);
    delta = matvec_transposed(l.W, delta);
  }
  return delta;
}

AdamState::AdamState(std::size_t params, double learning_rate)
    : lr(learning_rate), m(params, 0.0), v(params, 0.0) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  require_len(params.size(), state.m.size(), "adam parameters");
  require_len(grads.size(), state.m.size(), "adam gradients");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw Error("mse_loss: empty input");
  require_len(target.size(), pred.size(), "mse_loss target");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Matrix init_xavier(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_xavier(rows, cols, rng);
}

Matrix init_xavier(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("init_xavier: dimensions must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uni(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = uni(rng);
  return m;
}

Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error("finite_diff_grad: step must be positive");
  Vector probe(x.begin(), x.end());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void to_json(nlohmann::json& j, const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.in()},
                      {"out", l.out()},
                      {"activation", to_string(l.act)},
                      {"W", l.W.data()},
                      {"b", l.b}});
  }
  j = nlohmann::json{{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  try {
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
      const auto in = l.at("in").get<std::size_t>();
      const auto out = l.at("out").get<std::size_t>();
      layers.push_back({Matrix(out, in, l.at("W").get<std::vector<double>>()),
                        l.at("b").get<Vector>(),
                        activation_from_string(l.at("activation").get<std::string>())});
    }
    return Mlp(std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid network JSON: ") + e.what());
  }
}

}  // namespace involute
