#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "involute/linalg.hpp"
#include "involute/metrics.hpp"
#include "involute/nn.hpp"
#include "involute/symmetry.hpp"

namespace involute {

struct PhaseSample {
  double q = 0.0;
  double p = 0.0;
  double qdot = 0.0;
  double pdot = 0.0;
};

// H(q, p) = k·q²/2 + p²/(2m).
struct SpringConfig {
  double k = 1.0;
  double m = 1.0;
  std::size_t samples = 1000;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
  double amplitude_min = 0.5;
  double amplitude_max = 1.5;

  void validate() const;
  double energy(double q, double p) const { return 0.5 * k * q * q + 0.5 * p * p / m; }
};

// (q, p) area-uniform on the annulus amplitude_min ≤ ‖(q, p)‖ ≤ amplitude_max,
// velocities from Hamilton's equations plus Gaussian noise.
std::vector<PhaseSample> gen_spring_data(const SpringConfig& cfg);

Evaluator spring_hamiltonian(const SpringConfig& cfg);
GradientEvaluator spring_gradient(const SpringConfig& cfg);

// Mean of (∂H/∂p − q̇)² + (∂H/∂q + ṗ)² with the gradient supplied directly.
double hnn_loss_value(const GradientEvaluator& grad_h, std::span<const PhaseSample> batch);

// H_θ(q, p) as a scalar MLP, optionally queried through the block
// reparameterization (the model is then exactly invariant under it).
class HamiltonianModel {
 public:
  HamiltonianModel(Mlp net, std::optional<BlockInvarianceSpec> symmetry = std::nullopt);

  // 2 → hidden… → 1 with `act` hidden layers. ipt selects the two-block
  // sign-flip symmetry (q ↦ −q and p ↦ −p, both even).
  static HamiltonianModel make(std::span<const std::size_t> hidden, ActivationKind act,
                               std::uint64_t seed, bool ipt);

  const Mlp& net() const noexcept { return net_; }
  Mlp& net() noexcept { return net_; }
  const std::optional<BlockInvarianceSpec>& symmetry() const noexcept { return symmetry_; }

  double energy(double q, double p) const;
  // (∂H/∂q, ∂H/∂p).
  Vector gradient(double q, double p) const;

  Evaluator evaluator() const;
  GradientEvaluator gradient_evaluator() const;

  std::size_t param_count() const { return net_.param_count(); }
  Vector parameters() const { return net_.parameters(); }
  void set_parameters(std::span<const double> p) { net_.set_parameters(p); }

 private:
  Mlp net_;
  std::optional<BlockInvarianceSpec> symmetry_;
};

struct HnnLoss {
  double loss = 0.0;
  Vector grad;
};

// Loss and exact parameter gradient (forward-over-reverse through the input
// gradient of the network).
HnnLoss hnn_loss(const HamiltonianModel& model, std::span<const PhaseSample> batch);

struct Trajectory {
  std::vector<double> t;
  std::vector<double> q;
  std::vector<double> p;
  // Energy under the Hamiltonian that drove the rollout.
  std::vector<double> energy;
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e3;

// Classical RK4 on ż = (∂H/∂p, −∂H/∂q). Stops early once ‖z‖ > 1e3.
Trajectory rollout(const Evaluator& h, const GradientEvaluator& grad_h, double q0, double p0,
                   double dt, std::size_t steps);
Trajectory rollout(const HamiltonianModel& model, double q0, double p0, double dt,
                   std::size_t steps);

// Noise-free analytic solution of the spring from (q0, p0).
Trajectory spring_reference(const SpringConfig& cfg, double q0, double p0, double dt,
                            std::size_t steps);

// `t,q,p,energy` with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void emit_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

struct HnnTrainConfig {
  std::size_t epochs = 2000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{32, 32};
  ActivationKind activation = ActivationKind::tanh;
  double q0 = 1.0;
  double p0 = 0.0;
  double dt = 0.01;
  std::size_t steps = 2000;
  // Side length of the cell-centred phase grid over [−2, 2]² used for the
  // per-epoch violation column.
  std::size_t grid = 20;
};

struct HnnResult {
  HamiltonianModel model;
  std::vector<RunRecord> records;
  Trajectory trajectory;
  Trajectory reference;
  double coordinate_mse = 0.0;
  // Variance over the rollout of the true spring energy along the predicted
  // trajectory.
  double energy_variance = 0.0;
  double final_loss = 0.0;
};

HnnResult run_hnn_experiment(const SpringConfig& cfg, bool use_ipt, const HnnTrainConfig& train);

// Cell-centred side × side grid over [lo, hi]² (never contains the origin
// for even side).
std::vector<Vector> phase_grid(double lo, double hi, std::size_t side);

}  // namespace involute
