// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "involute/arch.hpp"
#include "involute/cnn.hpp"
#include "involute/experiment.hpp"
#include "involute/linalg.hpp"
#include "involute/metrics.hpp"
#include "involute/nn.hpp"
#include "involute/physics.hpp"
#include "involute/symmetry.hpp"
#include "oracles.hpp"

using namespace involute;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string num(double v) { return format_double(v); }

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("involute_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string drop_wall_clock(const std::string& csv) {
  if (csv.rfind("epoch,train_loss,", 0) != 0) return csv;
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

// --- toy1d runs shared by criteria 1 and 2 ---------------------------------

struct ToyOutcome {
  std::vector<RunRecord> records;
  double final_loss = 0.0;
};

const std::map<std::string, ToyOutcome>& toy1d_runs() {
  static const std::map<std::string, ToyOutcome> runs = [] {
    std::map<std::string, ToyOutcome> r;
    const fs::path dir = scratch("toy1d");
    for (const char* m : {"vn", "hln", "san", "iptn", "hub-multi"}) {
      ExperimentConfig cfg = parse_config(json{{"model", m}, {"seed", 1}}, Task::toy1d);
      cfg.out_dir = dir;
      cmd_toy1d(cfg);
      ToyOutcome o;
      std::ifstream csv(dir / ("toy1d_" + std::string(m) + "_r0.csv"));
      o.records = read_csv(csv);
      std::istringstream summary(slurp(dir / ("toy1d_" + std::string(m) + "_summary.csv")));
      std::string line;
      std::getline(summary, line);
      std::getline(summary, line);
      const auto a = line.find(',') + 1;
      o.final_loss = std::stod(line.substr(a, line.find(',', a) - a));
      r[m] = std::move(o);
    }
    return r;
  }();
  return runs;
}

Outcome exact_invariance() {
  Outcome o;
  const auto& runs = toy1d_runs();
  for (const char* m : {"hln", "san", "iptn", "hub-multi"}) {
    bool all_zero = true;
    for (const auto& rec : runs.at(m).records) all_zero = all_zero && rec.violation == 0.0;
    o.require(all_zero, std::string(m) + " violation not exactly 0.0 at every epoch");
    o.require(runs.at(m).records.size() == 5000, std::string(m) + " epoch count");
  }
  const double vn = runs.at("vn").records.back().violation;
  o.require(vn > 1e-3, "vn violation " + num(vn) + " <= 1e-3");
  o.note("hln/san/iptn/hub-multi violation=0.0 over 5000 epochs, vn=" + num(vn));
  return o;
}

Outcome loss_band() {
  Outcome o;
  std::string losses;
  for (const auto& [m, run] : toy1d_runs()) {
    o.require(run.final_loss >= 0.05 && run.final_loss <= 0.1, m + " loss " + num(run.final_loss));
    losses += (losses.empty() ? "" : " ") + m + "=" + num(run.final_loss);
  }
  o.note(losses);
  return o;
}

// --- structural checks ------------------------------------------------------

Outcome pass_counts() {
  Outcome o;
  const auto spec = InvolutorySpec::inversion(1, 1);
  auto count = [&](ModelKind k, const Symmetry& sym, std::size_t dim, const Vector& x) {
    ModelOptions opts;
    opts.kind = k;
    opts.input_dim = dim;
    PassCounter c;
    build_model(opts, sym).forward(x, c);
    return c;
  };
  const Vector x{0.7};
  o.require(count(ModelKind::vn, spec, 1, x).trunk_evals == 1, "vn 1 pass");
  o.require(count(ModelKind::hln, spec, 1, x).trunk_evals == 2, "hln 2 passes");
  o.require(count(ModelKind::iptn, spec, 1, x).trunk_evals == 1, "iptn 1 pass");
  const PassCounter san = count(ModelKind::san, spec, 1, x);
  o.require(san.first_layer_evals == 2 && san.trunk_evals == 1, "san first layer 2, rest 1");
  const std::size_t dims[] = {0, 1, 2};
  const int par[] = {1, -1, 1};
  const auto blocks = BlockInvarianceSpec::sign_flips(3, dims, par);
  o.require(count(ModelKind::hub_multi, blocks, 3, Vector{0.1, -0.4, 0.9}).trunk_evals == 8, "hub-multi k=3 8 passes");
  o.require(count(ModelKind::iptn, blocks, 3, Vector{0.1, -0.4, 0.9}).trunk_evals == 1, "iptn k=3 1 pass");
  o.note("vn=1 hln=2 iptn=1 san=2+1 hub-multi(k=3)=8");
  return o;
}

Outcome no_expressivity() {
  Outcome o;
  double worst = 0.0, worst_fd = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = demonstrate_no_expressivity(4 + seed, seed, ActivationKind::sigmoid, 0.0, 1 + seed % 4);
    worst = std::max({worst, p.max_weight_grad, p.max_input_grad});
    worst_fd = std::max({worst_fd, p.max_weight_grad_fd, p.max_input_grad_fd});
  }
  o.require(worst <= 1e-12, "analytic gradient " + num(worst));
  o.require(worst_fd <= 1e-8, "finite-difference gradient " + num(worst_fd));
  const auto soft = demonstrate_no_expressivity(8, 3, ActivationKind::softplus);
  const auto biased = demonstrate_no_expressivity(8, 3, ActivationKind::sigmoid, 3.0);
  o.require(soft.max_weight_grad > 1e-3, "softplus control");
  o.require(biased.max_weight_grad > 1e-3 && biased.max_weight_grad_fd > 1e-3, "sigmoid b=3 control");
  o.note("sigmoid b=0 max grad=" + num(worst) + " fd=" + num(worst_fd) + ", softplus=" +
         num(soft.max_weight_grad) + ", sigmoid b=3=" + num(biased.max_weight_grad));
  return o;
}

Outcome audit() {
  Outcome o;
  for (ActivationKind k : {ActivationKind::sigmoid, ActivationKind::tanh}) {
    const auto r = audit_activation(k);
    o.require(r.unsafe_biases == std::vector<double>{0.0}, std::string(to_string(k)) + " unsafe only at b*=0");
  }
  for (ActivationKind k : {ActivationKind::relu, ActivationKind::swish, ActivationKind::softplus}) {
    o.require(!audit_activation(k).unsafe(), std::string(to_string(k)) + " safe");
  }
  const auto snake = audit_activation(ActivationKind::snake);
  bool multiples = snake.unsafe_biases.size() == 7;
  for (std::size_t i = 0; multiples && i < 7; ++i) {
    multiples = std::fabs(snake.unsafe_biases[i] - (static_cast<double>(i) - 3.0) * std::numbers::pi) <= 1e-3;
  }
  o.require(multiples, "snake unsafe at nπ in [-10, 10]");
  o.note("sigmoid/tanh UNSAFE+ at 0, relu/swish/softplus SAFE+, snake " +
         std::to_string(snake.unsafe_biases.size()) + " points at nπ");
  return o;
}

Outcome partition() {
  Outcome o;
  std::mt19937_64 rng(2718);
  std::size_t bad_matrix = 0, bad_vector = 0, vectors = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 7;
    const std::size_t g = 1 + (t / 7) % n;
    const Matrix a = random_involutory(n, g, 5000 + t);
    if (!check_involutory(a, 1e-8) || std::round((n - a.trace()) / 2.0) != static_cast<double>(g)) ++bad_matrix;
    const InvolutorySpec spec(a, t % 2 ? -1 : 1);
    const auto& d = spec.diagonalization();
    for (int k = 0; k < 100; ++k, ++vectors) {
      const Vector x = oracle::gaussian_vec(n, rng);
      const Membership mx = classify_traced(x, spec);
      const Membership max = classify_traced(matvec(a, x), spec);
      bool ok = vector_in_pid(x, d.Pinv, d.gamma, d.n) == (mx.label != PartitionLabel::SMinus);
      if (!mx.on_boundary && !max.on_boundary) ok = ok && max.label == swapped(mx.label) && mx.label != PartitionLabel::S0;
      const Reparameterized r = reparam_point(x, spec);
      ok = ok && classify(r.x, spec) != PartitionLabel::SMinus;
      ok = ok && r.sign == (mx.label == PartitionLabel::SMinus ? spec.parity() : 1);
      if (!ok) ++bad_vector;
    }
  }
  o.require(bad_matrix == 0, std::to_string(bad_matrix) + " bad involutions");
  o.require(bad_vector == 0, std::to_string(bad_vector) + " bad vectors");
  o.note("100 involutions, " + std::to_string(vectors) + " vectors");
  return o;
}

// --- gradients --------------------------------------------------------------

Outcome gradients() {
  Outcome o;
  std::mt19937_64 rng(99);
  double worst_dense = 0.0, worst_model = 0.0, worst_conv = 0.0, worst_hnn = 0.0;

  for (std::uint64_t s = 0; s < 20; ++s) {
    const ActivationKind act = all_activations()[s % all_activations().size()];
    if (act == ActivationKind::relu) continue;
    const std::size_t widths[] = {3, 5, 4, 2};
    const Mlp net = Mlp::xavier(widths, act, ActivationKind::identity, s);
    const Vector x = oracle::gaussian_vec(3, rng), dy = oracle::gaussian_vec(2, rng);
    ForwardCache cache;
    net.forward(x, &cache);
    Vector grad(net.param_count(), 0.0);
    backward(net, cache, dy, grad);
    const ScalarFunction f = [&](std::span<const double> p) {
      Mlp c = net;
      c.set_parameters(p);
      return dot(dy, c.forward(x));
    };
    worst_dense = std::max(worst_dense, oracle::max_rel_err(grad, finite_diff_grad(f, net.parameters())));
  }

  for (ModelKind k : {ModelKind::vn, ModelKind::hln, ModelKind::san, ModelKind::iptn, ModelKind::hub_multi}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const int p = (k == ModelKind::san || s % 2 == 0) ? 1 : -1;
      ModelOptions opts;
      opts.kind = k;
      opts.input_dim = 2;
      opts.hidden = {6, 5};
      opts.activation = s % 2 ? ActivationKind::tanh : ActivationKind::swish;
      opts.seed = 300 + s;
      SymmetricModel m = build_model(opts, InvolutorySpec(random_involutory(2, 1 + s % 2, s), p));
      Vector theta = m.parameters();
      for (double& v : theta) v += 0.2 * std::normal_distribution<double>()(rng);
      m.set_parameters(theta);
      const Vector x = oracle::gaussian_vec(2, rng);
      PassCounter c;
      Vector grad(m.param_count(), 0.0);
      m.forward_backward(x, c, grad);
      const ScalarFunction f = [&](std::span<const double> q) {
        SymmetricModel copy = m;
        copy.set_parameters(q);
        PassCounter cc;
        return copy.forward(x, cc);
      };
      worst_model = std::max(worst_model, oracle::max_rel_err(grad, finite_diff_grad(f, theta)));
    }
  }

  for (std::uint64_t s = 0; s < 20; ++s) {
    ConvSpec conv;
    conv.invariant = true;
    conv.flip_axis = s % 2 ? FlipAxis::vertical : FlipAxis::horizontal;
    conv.num_filters = 2;
    conv.kernel_size = s % 3 == 0 ? 5 : 3;
    const SmallCnn net(conv, 9, 8, 5, 3, s % 3 == 1 ? ActivationKind::sigmoid : ActivationKind::tanh, s);
    std::vector<double> px(72);
    for (double& v : px) v = std::uniform_real_distribution<double>()(rng);
    const Image img(9, 8, px);
    Vector grad(net.param_count(), 0.0);
    net.loss_and_gradient(img, s % 3, grad);
    const ScalarFunction f = [&](std::span<const double> p) {
      SmallCnn copy = net;
      copy.set_parameters(p);
      Vector g(copy.param_count(), 0.0);
      return copy.loss_and_gradient(img, s % 3, g);
    };
    worst_conv = std::max(worst_conv, oracle::max_rel_err(grad, finite_diff_grad(f, net.parameters())));
  }

  SpringConfig spring;
  spring.samples = 6;
  const auto data = gen_spring_data(spring);
  for (std::uint64_t s = 0; s < 20; ++s) {
    HamiltonianModel model = HamiltonianModel::make(std::vector<std::size_t>{6, 5}, ActivationKind::tanh, s, s % 2 == 1);
    Vector theta = model.parameters();
    for (double& v : theta) v += 0.2 * std::normal_distribution<double>()(rng);
    model.set_parameters(theta);
    const HnnLoss l = hnn_loss(model, data);
    const ScalarFunction f = [&](std::span<const double> p) {
      HamiltonianModel copy = model;
      copy.set_parameters(p);
      return hnn_loss_value(copy.gradient_evaluator(), data);
    };
    worst_hnn = std::max(worst_hnn, oracle::max_rel_err(l.grad, finite_diff_grad(f, theta)));
  }

  o.require(worst_dense <= 1e-5, "dense " + num(worst_dense));
  o.require(worst_model <= 1e-5, "models " + num(worst_model));
  o.require(worst_conv <= 1e-5, "invariant conv " + num(worst_conv));
  o.require(worst_hnn <= 1e-4, "hnn second order " + num(worst_hnn));
  o.note("max rel err dense=" + num(worst_dense) + " models=" + num(worst_model) + " conv=" + num(worst_conv) +
         " hnn=" + num(worst_hnn));
  return o;
}

// --- experiments ------------------------------------------------------------

Outcome hnn() {
  Outcome o;
  HamiltonianModel even = HamiltonianModel::make(std::vector<std::size_t>{8, 8}, ActivationKind::tanh, 4, true);
  Vector theta = even.parameters();
  std::mt19937_64 rng(4);
  for (double& v : theta) v += 0.2 * std::normal_distribution<double>()(rng);
  even.set_parameters(theta);
  bool bitwise = true;
  for (const auto& z : phase_grid(-2.0, 2.0, 50)) bitwise = bitwise && even.energy(-z[0], -z[1]) == even.energy(z[0], z[1]);
  o.require(bitwise, "IPT Hamiltonian not bitwise even on the 50x50 grid");

  SpringConfig clean;
  clean.noise_std = 0.0;
  o.require(hnn_loss_value(spring_gradient(clean), gen_spring_data(clean)) == 0.0, "true Hamiltonian loss != 0");

  const Trajectory tr = rollout(spring_hamiltonian(clean), spring_gradient(clean), 1.0, 0.0, 0.01, 2000);
  double drift = 0.0;
  for (double e : tr.energy) drift = std::max(drift, std::fabs(e - tr.energy.front()));
  o.require(drift <= 1e-6, "RK4 drift " + num(drift));

  SpringConfig spring;
  HnnTrainConfig train;
  train.epochs = 500;
  const HnnResult base = run_hnn_experiment(spring, false, train);
  const HnnResult ipt = run_hnn_experiment(spring, true, train);
  bool zero = true;
  for (const auto& r : ipt.records) zero = zero && r.violation == 0.0;
  o.require(zero, "IPT violation nonzero during training");
  o.require(!base.trajectory.diverged && !ipt.trajectory.diverged, "rollout diverged");
  o.note("drift=" + num(drift) + ", 500 epochs seed 0: baseline energy_var=" + num(base.energy_variance) +
         " coord_mse=" + num(base.coordinate_mse) + ", ipt energy_var=" + num(ipt.energy_variance) +
         " coord_mse=" + num(ipt.coordinate_mse));
  return o;
}

Outcome cnn() {
  Outcome o;
  CnnTrainConfig cfg;
  cfg.conv.invariant = true;
  for (double asym : {0.0, 0.3}) {
    const auto data = synth_symmetric_dataset(6, 10, 16, 16, 0, SynthOptions{FlipAxis::horizontal, 0.1, asym, 0});
    const SmallCnn fresh(cfg.conv, 16, 16, cfg.hidden, 6, cfg.activation, cfg.seed);
    o.require(cnn_flip_violation(fresh, data.images, FlipAxis::horizontal) == 0.0, "untrained IKCNN violation");
    const auto res = cnn_train(data, cfg);
    bool zero = true;
    for (const auto& r : res.records) zero = zero && r.violation == 0.0;
    o.require(zero && cnn_flip_violation(res.model, data.images, FlipAxis::horizontal) == 0.0, "trained IKCNN violation");
    o.require(res.accuracy.back() >= 0.9, "accuracy " + num(res.accuracy.back()));
    o.note("asym=" + num(asym) + " ikcnn acc=" + num(res.accuracy.back()));
    if (asym > 0.0) {
      CnnTrainConfig v = cfg;
      v.conv.invariant = false;
      const auto vres = cnn_train(data, v);
      o.note("vcnn flip_violation=" + num(vres.records.back().violation) + " acc=" + num(vres.accuracy.back()));
    }
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::pair<Task, json>> runs{
      {Task::toy1d, json::parse(R"({"model": "iptn", "repeats": 2, "train": {"epochs": 300}})")},
      {Task::toy2d, json::parse(R"({"model": "hub-multi", "target": "sin_product", "train": {"epochs": 100}})")},
      {Task::hnn, json::parse(R"({"train": {"epochs": 30}, "rollout": {"steps": 200}})")},
      {Task::cnn, json::parse(R"({"model": "vcnn", "cnn": {"epochs": 10}})")}};
  std::size_t files = 0;
  for (const auto& [task, j] : runs) {
    fs::path dirs[2];
    for (int i = 0; i < 2; ++i) {
      dirs[i] = scratch("det_" + std::string(to_string(task)) + std::to_string(i));
      ExperimentConfig cfg = parse_config(j, task);
      cfg.out_dir = dirs[i];
      std::istringstream in;
      std::ostringstream out;
      run_experiment(cfg, in, out);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const fs::path other = dirs[1] / entry.path().filename();
      o.require(fs::exists(other) && drop_wall_clock(slurp(entry.path())) == drop_wall_clock(slurp(other)),
                entry.path().filename().string() + " differs");
      ++files;
    }
  }
  o.note(std::to_string(files) + " artifacts byte-identical (wall_ms column excluded)");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact invariance of hln/san/iptn, vn violation > 1e-3", exact_invariance},
      {"toy1d final MSE within [0.05, 0.1]", loss_band},
      {"trunk pass counts", pass_counts},
      {"no expressivity of symmetrized sigmoid under inversion", no_expressivity},
      {"unsafe-bias audit", audit},
      {"partition trichotomy on random involutions", partition},
      {"gradients match finite differences", gradients},
      {"hnn evenness, zero loss, rk4 drift, baseline vs ipt", hnn},
      {"ikcnn flip invariance and accuracy", cnn},
      {"deterministic artifacts", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("AC%zu %s %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
