#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "involute/linalg.hpp"
#include "involute/nn.hpp"
#include "involute/symmetry.hpp"

namespace involute {

// Deterministic replacement for wall-clock timing: how many times each
// part of a network was evaluated.
struct PassCounter {
  std::uint64_t trunk_evals = 0;
  std::uint64_t first_layer_evals = 0;
};

enum class ModelKind { vn, hln, san, iptn, hub_multi };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

// Plain feed-forward baseline.
struct VanillaNetwork {
  Mlp net;

  double forward(std::span<const double> x, PassCounter& counter) const;
  // Adds ∂out/∂θ into grad and returns out.
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  std::size_t param_count() const { return net.param_count(); }
  Vector parameters() const { return net.parameters(); }
  void set_parameters(std::span<const double> p) { net.set_parameters(p); }
};

// Hub-layered network: the trunk produces the last hidden layer h, the hub
// forms H = h(x) + p·h(Ax) and the head returns wᵀH + θ(p)·2b.
struct HubNetwork {
  Mlp trunk;
  Vector head_w;
  double head_b = 0.0;
  InvolutorySpec spec;

  HubNetwork(Mlp trunk, Vector head_w, double head_b, InvolutorySpec spec);

  double forward(std::span<const double> x, PassCounter& counter) const;
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  std::size_t param_count() const;
  Vector parameters() const;
  void set_parameters(std::span<const double> p);
};

double hln_forward(const HubNetwork& h, std::span<const double> x, PassCounter& counter);

// Hub superposition over every combination of k independent block
// involutions (2^k trunk passes). k ≤ kMaxHubBlocks.
inline constexpr std::size_t kMaxHubBlocks = 12;

struct HubMultiNetwork {
  Mlp trunk;
  Vector head_w;
  double head_b = 0.0;
  BlockInvarianceSpec blocks;

  HubMultiNetwork(Mlp trunk, Vector head_w, double head_b, BlockInvarianceSpec blocks);

  double forward(std::span<const double> x, PassCounter& counter) const;
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  std::size_t param_count() const;
  Vector parameters() const;
  void set_parameters(std::span<const double> p);
};

double hub_multi_forward(const Mlp& trunk, std::span<const double> head_w, double head_b,
                         const BlockInvarianceSpec& blocks, std::span<const double> x,
                         PassCounter& counter);

// Symmetrized-activation network: the first layer computes
// σ(Wx + b) + σ(WAx + b); the remaining layers run once. Even parity only.
struct SANetwork {
  Mlp net;
  InvolutorySpec spec;

  SANetwork(Mlp net, InvolutorySpec spec);

  double forward(std::span<const double> x, PassCounter& counter) const;
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  // First-layer activations and their gradients, for the expressivity checks.
  Vector first_layer(std::span<const double> x) const;
  Vector input_gradient(std::span<const double> x) const;
  std::size_t param_count() const { return net.param_count(); }
  Vector parameters() const { return net.parameters(); }
  void set_parameters(std::span<const double> p) { net.set_parameters(p); }
};

double san_forward(const SANetwork& s, std::span<const double> x, PassCounter& counter);

using Symmetry = std::variant<InvolutorySpec, BlockInvarianceSpec>;

// Plain network behind the partition reparameterization.
struct IptNetwork {
  Mlp net;
  Symmetry symmetry;

  Reparameterized reparam(std::span<const double> x) const;
  double forward(std::span<const double> x, PassCounter& counter) const;
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  std::size_t param_count() const { return net.param_count(); }
  Vector parameters() const { return net.parameters(); }
  void set_parameters(std::span<const double> p) { net.set_parameters(p); }
};

double iptn_forward(const Mlp& net, const InvolutorySpec& spec, std::span<const double> x,
                    PassCounter& counter);

class SymmetricModel {
 public:
  using Variant = std::variant<VanillaNetwork, HubNetwork, SANetwork, IptNetwork, HubMultiNetwork>;

  explicit SymmetricModel(Variant model) : model_(std::move(model)) {}

  ModelKind kind() const;
  std::size_t input_dim() const;

  double forward(std::span<const double> x, PassCounter& counter) const;
  double forward_backward(std::span<const double> x, PassCounter& counter,
                          std::span<double> grad) const;
  std::size_t param_count() const;
  Vector parameters() const;
  void set_parameters(std::span<const double> p);

  // Uncounted evaluator view.
  Evaluator evaluator() const;

  const Variant& variant() const noexcept { return model_; }
  Variant& variant() noexcept { return model_; }

 private:
  Variant model_;
};

struct ModelOptions {
  ModelKind kind = ModelKind::vn;
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{10, 10};
  ActivationKind activation = ActivationKind::sigmoid;
  // First-layer activation for SAN.
  ActivationKind san_activation = ActivationKind::swish;
  std::uint64_t seed = 0;
};

SymmetricModel build_model(const ModelOptions& options, const Symmetry& symmetry);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
};

// Full-batch MSE training with Adam. IPT models get their dataset moved into
// the principal domain once, before the first epoch. on_epoch runs after the
// loss is measured and before the update of that epoch is applied.
void fit_mse(SymmetricModel& model, const Dataset& data, std::size_t epochs, double lr,
             PassCounter& counter,
             const std::function<void(const EpochStats&, const SymmetricModel&)>& on_epoch = {});

// Mean squared error of the model over a dataset (counted).
double dataset_mse(const SymmetricModel& model, const Dataset& data, PassCounter& counter);

void to_json(nlohmann::json& j, const SymmetricModel& model);
SymmetricModel model_from_json(const nlohmann::json& j);

// Numeric search for biases b* making σ_b(z) = σ(b+z) − σ(b) odd (parity +1)
// or σ(b+z) even (parity −1).
struct AuditOptions {
  double b_min = -10.0;
  double b_max = 10.0;
  double b_step = 1e-3;
  double z_max = 8.0;
  std::size_t z_points = 256;
  double tol = 1e-6;
  int parity = 1;
};

struct UnsafePointReport {
  ActivationKind kind = ActivationKind::sigmoid;
  int parity = 1;
  std::vector<double> unsafe_biases;
  std::string search_grid;

  bool unsafe() const noexcept { return !unsafe_biases.empty(); }
};

// Worst residual of the oddness (parity +1) or evenness (parity −1)
// condition at bias b over the z grid, plus the far probes ±(|b| + z_max).
double audit_residual(ActivationKind kind, double b, const AuditOptions& options);

UnsafePointReport audit_activation(ActivationKind kind, const AuditOptions& options = {});

struct ExpressivityProbe {
  double max_weight_grad = 0.0;
  double max_input_grad = 0.0;
  double max_weight_grad_fd = 0.0;
  double max_input_grad_fd = 0.0;
};

// Builds a SAN with A = −I_n and every first-layer bias set to `bias`, then
// reports the largest first-layer activation gradients with respect to the
// weights and the input, analytically and by central differences.
ExpressivityProbe demonstrate_no_expressivity(std::size_t width, std::uint64_t seed,
                                              ActivationKind kind = ActivationKind::sigmoid,
                                              double bias = 0.0, std::size_t input_dim = 3);

}  // namespace involute
