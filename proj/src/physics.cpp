#include "involute/physics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <utility>

#include "involute/error.hpp"

namespace involute {

void SpringConfig::validate() const {
  if (!(k > 0.0) || !(m > 0.0)) throw ConfigError("spring constants k and m must be positive");
  if (samples == 0) throw ConfigError("spring dataset needs at least one sample");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (!(amplitude_min >= 0.0) || !(amplitude_max >= amplitude_min)) {
    throw ConfigError("amplitude range must satisfy 0 <= min <= max");
  }
}

std::vector<PhaseSample> gen_spring_data(const SpringConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double r0 = cfg.amplitude_min * cfg.amplitude_min;
  const double r1 = cfg.amplitude_max * cfg.amplitude_max;
  std::vector<PhaseSample> out;
  out.reserve(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const double radius = std::sqrt(r0 + (r1 - r0) * uni(rng));
    const double angle = 2.0 * std::numbers::pi * uni(rng);
    PhaseSample s;
    s.q = radius * std::cos(angle);
    s.p = radius * std::sin(angle);
    s.qdot = s.p / cfg.m;
    s.pdot = -cfg.k * s.q;
    if (cfg.noise_std > 0.0) {
      s.qdot += cfg.noise_std * noise(rng);
      s.pdot += cfg.noise_std * noise(rng);
    }
    out.push_back(s);
  }
  return out;
}

Evaluator spring_hamiltonian(const SpringConfig& cfg) {
  return [cfg](std::span<const double> z) { return cfg.energy(z[0], z[1]); };
}

GradientEvaluator spring_gradient(const SpringConfig& cfg) {
  return [cfg](std::span<const double> z) { return Vector{cfg.k * z[0], z[1] / cfg.m}; };
}

double hnn_loss_value(const GradientEvaluator& grad_h, std::span<const PhaseSample> batch) {
  if (batch.empty()) throw Error("hnn_loss: empty batch");
  double sum = 0.0;
  for (const PhaseSample& s : batch) {
    const Vector g = grad_h(Vector{s.q, s.p});
    const double rp = g[1] - s.qdot;
    const double rq = g[0] + s.pdot;
    sum += rp * rp + rq * rq;
  }
  return sum / static_cast<double>(batch.size());
}

// --- HamiltonianModel -------------------------------------------------------

HamiltonianModel::HamiltonianModel(Mlp net, std::optional<BlockInvarianceSpec> symmetry)
    : net_(std::move(net)), symmetry_(std::move(symmetry)) {
  if (net_.input_dim() != 2 || net_.output_dim() != 1) {
    throw DimensionMismatch("a Hamiltonian network maps (q, p) to one scalar");
  }
  if (symmetry_ && symmetry_->dim() != 2) {
    throw DimensionMismatch("Hamiltonian symmetry must act on (q, p)");
  }
}

HamiltonianModel HamiltonianModel::make(std::span<const std::size_t> hidden, ActivationKind act,
                                        std::uint64_t seed, bool ipt) {
  std::vector<std::size_t> widths{2};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  std::optional<BlockInvarianceSpec> sym;
  if (ipt) {
    const std::size_t dims[] = {0, 1};
    const int parities[] = {1, 1};
    sym = BlockInvarianceSpec::sign_flips(2, dims, parities);
  }
  return HamiltonianModel(Mlp::xavier(widths, act, ActivationKind::identity, seed), std::move(sym));
}

double HamiltonianModel::energy(double q, double p) const {
  const Vector z{q, p};
  if (!symmetry_) return net_.forward_scalar(z);
  const Reparameterized r = reparam_multi(z, *symmetry_);
  return r.sign * net_.forward_scalar(r.x);
}

Vector HamiltonianModel::gradient(double q, double p) const { return gradient_evaluator()(Vector{q, p}); }

Evaluator HamiltonianModel::evaluator() const {
  return [this](std::span<const double> z) { return energy(z[0], z[1]); };
}

GradientEvaluator HamiltonianModel::gradient_evaluator() const {
  GradientEvaluator raw = [this](std::span<const double> z) { return input_gradient(net_, z); };
  if (!symmetry_) return raw;
  return wrap_input_gradient(std::move(raw), *symmetry_);
}

namespace {

// Jacobian of the block reparameterization applied to r: A_i on mapped
// blocks, identity elsewhere.
Vector apply_block_jacobian(const BlockInvarianceSpec& spec, const std::vector<bool>& mapped,
                            const Vector& r) {
  Vector out = r;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (!mapped[k]) continue;
    const auto& block = spec.blocks()[k];
    const std::size_t d = block.spec.dim();
    const Vector sub(r.begin() + static_cast<std::ptrdiff_t>(block.offset),
                     r.begin() + static_cast<std::ptrdiff_t>(block.offset + d));
    const Vector img = matvec(block.spec.matrix(), sub);
    std::copy(img.begin(), img.end(), out.begin() + static_cast<std::ptrdiff_t>(block.offset));
  }
  return out;
}

}  // namespace

HnnLoss hnn_loss(const HamiltonianModel& model, std::span<const PhaseSample> batch) {
  if (batch.empty()) throw Error("hnn_loss: empty batch");
  const Mlp& net = model.net();
  HnnLoss out;
  out.grad.assign(net.param_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const PhaseSample& s : batch) {
    Vector x{s.q, s.p};
    int sign = 1;
    std::vector<bool> mapped;
    if (model.symmetry()) {
      MultiReparam m = reparam_multi_traced(x, *model.symmetry());
      x = std::move(m.point.x);
      sign = m.point.sign;
      mapped = std::move(m.mapped);
    }
    // ∇H(z) = sign·Jᵀ∇net(x′), so rᵀ∇H = (sign·J r)ᵀ∇net(x′).
    Vector g = input_gradient(net, x);
    if (model.symmetry()) {
      Vector jg = g;
      for (std::size_t k = 0; k < model.symmetry()->size(); ++k) {
        if (!mapped[k]) continue;
        const auto& block = model.symmetry()->blocks()[k];
        const std::size_t d = block.spec.dim();
        const Vector sub(g.begin() + static_cast<std::ptrdiff_t>(block.offset),
                         g.begin() + static_cast<std::ptrdiff_t>(block.offset + d));
        const Vector img = matvec_transposed(block.spec.matrix(), sub);
        std::copy(img.begin(), img.end(), jg.begin() + static_cast<std::ptrdiff_t>(block.offset));
      }
      for (double& v : jg) v *= sign;
      g = std::move(jg);
    }
    const double rq = g[0] + s.pdot;
    const double rp = g[1] - s.qdot;
    out.loss += (rq * rq + rp * rp) * inv_n;
    Vector r{2.0 * rq, 2.0 * rp};
    if (model.symmetry()) {
      r = apply_block_jacobian(*model.symmetry(), mapped, r);
      for (double& v : r) v *= sign;
    }
    directional_backward(net, x, r, out.grad, inv_n);
  }
  return out;
}

// --- rollout ----------------------------------------------------------------

Trajectory rollout(const Evaluator& h, const GradientEvaluator& grad_h, double q0, double p0,
                   double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw ConfigError("rollout: dt must be positive");
  const auto field = [&](double q, double p) {
    const Vector g = grad_h(Vector{q, p});
    return std::pair<double, double>{g[1], -g[0]};
  };
  Trajectory tr;
  double q = q0, p = p0;
  const auto record = [&](std::size_t i) {
    tr.t.push_back(static_cast<double>(i) * dt);
    tr.q.push_back(q);
    tr.p.push_back(p);
    tr.energy.push_back(h(Vector{q, p}));
  };
  record(0);
  for (std::size_t i = 1; i <= steps; ++i) {
    const auto [k1q, k1p] = field(q, p);
    const auto [k2q, k2p] = field(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p);
    const auto [k3q, k3p] = field(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p);
    const auto [k4q, k4p] = field(q + dt * k3q, p + dt * k3p);
    q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    if (!std::isfinite(q) || !std::isfinite(p) || std::hypot(q, p) > kDivergenceNorm) {
      tr.diverged = true;
      break;
    }
    record(i);
  }
  return tr;
}

Trajectory rollout(const HamiltonianModel& model, double q0, double p0, double dt,
                   std::size_t steps) {
  return rollout(model.evaluator(), model.gradient_evaluator(), q0, p0, dt, steps);
}

Trajectory spring_reference(const SpringConfig& cfg, double q0, double p0, double dt,
                            std::size_t steps) {
  cfg.validate();
  const double w = std::sqrt(cfg.k / cfg.m);
  Trajectory tr;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double q = q0 * std::cos(w * t) + p0 / (cfg.m * w) * std::sin(w * t);
    const double p = -cfg.m * w * q0 * std::sin(w * t) + p0 * std::cos(w * t);
    tr.t.push_back(t);
    tr.q.push_back(q);
    tr.p.push_back(p);
    tr.energy.push_back(cfg.energy(q, p));
  }
  return tr;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,q,p,energy\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    out << format_double(traj.t[i]) << ',' << format_double(traj.q[i]) << ','
        << format_double(traj.p[i]) << ',' << format_double(traj.energy[i]) << '\n';
  }
}

void emit_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_trajectory_csv(traj, out);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Vector> phase_grid(double lo, double hi, std::size_t side) {
  if (side == 0) throw ConfigError("phase grid needs a positive side length");
  const double h = (hi - lo) / static_cast<double>(side);
  std::vector<Vector> pts;
  pts.reserve(side * side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      pts.push_back({lo + (static_cast<double>(i) + 0.5) * h, lo + (static_cast<double>(j) + 0.5) * h});
    }
  }
  return pts;
}

// --- experiment -------------------------------------------------------------

HnnResult run_hnn_experiment(const SpringConfig& cfg, bool use_ipt, const HnnTrainConfig& train) {
  const std::vector<PhaseSample> data = gen_spring_data(cfg);
  HnnResult res{HamiltonianModel::make(train.hidden, train.activation, train.seed, use_ipt),
                {}, {}, {}, 0.0, 0.0, 0.0};
  HamiltonianModel& model = res.model;
  const std::vector<Vector> grid = phase_grid(-2.0, 2.0, train.grid);
  const Matrix inversion{{-1.0, 0.0}, {0.0, -1.0}};

  AdamState adam(model.param_count(), train.lr);
  Vector params = model.parameters();
  std::uint64_t passes = 0;
  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const HnnLoss l = hnn_loss(model, data);
    // One input-gradient pass plus one forward-over-reverse pass per sample.
    passes += 2 * data.size();
    const double violation = violation_metric(model.evaluator(), grid, inversion, 1);
    passes += 2 * grid.size();
    adam_step(adam, params, l.grad);
    model.set_parameters(params);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res.records.push_back(RunRecord{epoch, l.loss, violation, passes, ms});
    res.final_loss = l.loss;
  }

  res.trajectory = rollout(model, train.q0, train.p0, train.dt, train.steps);
  res.reference = spring_reference(cfg, train.q0, train.p0, train.dt, train.steps);
  const std::size_t n = res.trajectory.t.size();
  double se = 0.0, mean_e = 0.0;
  std::vector<double> true_e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dq = res.trajectory.q[i] - res.reference.q[i];
    const double dp = res.trajectory.p[i] - res.reference.p[i];
    se += dq * dq + dp * dp;
    true_e[i] = cfg.energy(res.trajectory.q[i], res.trajectory.p[i]);
    mean_e += true_e[i];
  }
  mean_e /= static_cast<double>(n);
  double var = 0.0;
  for (double e : true_e) var += (e - mean_e) * (e - mean_e);
  res.coordinate_mse = se / (2.0 * static_cast<double>(n));
  res.energy_variance = var / static_cast<double>(n);
  return res;
}

}  // namespace involute
