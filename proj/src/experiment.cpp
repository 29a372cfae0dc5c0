#include "involute/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "involute/error.hpp"
#include "involute/metrics.hpp"
#include "involute/symmetry.hpp"

namespace involute {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Task task) {
  switch (task) {
    case Task::toy1d: return "toy1d";
    case Task::toy2d: return "toy2d";
    case Task::hnn: return "hnn";
    case Task::cnn: return "cnn";
    case Task::pid_check: return "pid-check";
    case Task::audit: return "audit";
    case Task::eval: return "eval";
  }
  return "?";
}

Task task_from_string(std::string_view name) {
  for (Task t : {Task::toy1d, Task::toy2d, Task::hnn, Task::cnn, Task::pid_check, Task::audit,
                 Task::eval}) {
    if (name == to_string(t)) return t;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnsupportedParity*>(&e) ||
      dynamic_cast<const NotInvolutory*>(&e) || dynamic_cast<const IdentityExcluded*>(&e) ||
      dynamic_cast<const IncompatibleOffset*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return 2;
  }
  return 3;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::string format_summary_number(double v) {
  if (std::isfinite(v) && v == std::trunc(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
  }
  return format_double(v);
}

// --- config -----------------------------------------------------------------

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void parse_train(const json& j, TrainConfig& t) {
  read_opt(j, "epochs", t.epochs);
  read_opt(j, "lr", t.lr);
  read_opt(j, "seed", t.seed);
  read_opt(j, "hidden", t.hidden);
  read_opt(j, "noise_std", t.noise_std);
  if (j.contains("activation")) t.activation = activation_from_string(j.at("activation").get<std::string>());
}

bool is_mlp_model(const std::string& m) {
  return m == "vn" || m == "hln" || m == "san" || m == "iptn" || m == "hub-multi";
}

}  // namespace

ExperimentConfig parse_config(const json& j, Task task) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  c.task = task;
  if (j.contains("task") && task_from_string(j.at("task").get<std::string>()) != task) {
    throw ConfigError("config task '" + j.at("task").get<std::string>() +
                      "' does not match subcommand " + to_string(task));
  }
  try {
    if (task == Task::hnn) c.model = "both";
    if (task == Task::cnn) c.model = "ikcnn";
    read_opt(j, "model", c.model);
    if (j.contains("spec") && !j.at("spec").is_null()) c.spec = j.at("spec");
    if (j.contains("train")) parse_train(j.at("train"), c.train);
    read_opt(j, "seed", c.train.seed);
    read_opt(j, "repeats", c.repeats);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();

    if (task == Task::toy2d) {
      c.samples = 400;
      c.sample_range = 3.0;
    }
    read_opt(j, "samples", c.samples);
    read_opt(j, "sample_range", c.sample_range);
    read_opt(j, "validation_points", c.validation_points);
    read_opt(j, "validation_range", c.validation_range);
    read_opt(j, "resolution", c.resolution);
    if (j.contains("target")) {
      const auto t = j.at("target").get<std::string>();
      if (t == "sin_sum") {
        c.target = Toy2dTarget::sin_sum;
      } else if (t == "sin_product") {
        c.target = Toy2dTarget::sin_product;
      } else {
        throw ConfigError("unknown toy2d target '" + t + "'");
      }
    }
    if (j.contains("san_activation")) {
      c.san_activation = activation_from_string(j.at("san_activation").get<std::string>());
    }

    if (j.contains("spring")) {
      const json& s = j.at("spring");
      read_opt(s, "k", c.spring.k);
      read_opt(s, "m", c.spring.m);
      read_opt(s, "samples", c.spring.samples);
      read_opt(s, "noise_std", c.spring.noise_std);
      read_opt(s, "seed", c.spring.seed);
      read_opt(s, "amplitude_min", c.spring.amplitude_min);
      read_opt(s, "amplitude_max", c.spring.amplitude_max);
    }
    if (task == Task::hnn) {
      c.hnn.seed = c.train.seed;
      c.spring.seed = c.train.seed;
      if (j.contains("train")) {
        const json& t = j.at("train");
        read_opt(t, "epochs", c.hnn.epochs);
        read_opt(t, "lr", c.hnn.lr);
        read_opt(t, "hidden", c.hnn.hidden);
        if (t.contains("activation")) {
          c.hnn.activation = activation_from_string(t.at("activation").get<std::string>());
        }
      }
      if (j.contains("rollout")) {
        const json& r = j.at("rollout");
        read_opt(r, "q0", c.hnn.q0);
        read_opt(r, "p0", c.hnn.p0);
        read_opt(r, "dt", c.hnn.dt);
        read_opt(r, "steps", c.hnn.steps);
      }
      if (j.contains("spring")) read_opt(j.at("spring"), "seed", c.spring.seed);
      if (c.model != "vn" && c.model != "iptn" && c.model != "both") {
        throw ConfigError("hnn model must be vn, iptn or both");
      }
      if (c.hnn.activation == ActivationKind::relu) {
        throw ConfigError("hnn needs a smooth activation; relu has no second derivative");
      }
      c.spring.validate();
    }

    if (task == Task::cnn) {
      if (c.model != "ikcnn" && c.model != "vcnn") throw ConfigError("cnn model must be ikcnn or vcnn");
      c.cnn.conv.invariant = c.model == "ikcnn";
      c.cnn.seed = c.train.seed;
      if (j.contains("cnn")) {
        const json& n = j.at("cnn");
        read_opt(n, "kernel_size", c.cnn.conv.kernel_size);
        read_opt(n, "num_filters", c.cnn.conv.num_filters);
        read_opt(n, "hidden", c.cnn.hidden);
        read_opt(n, "epochs", c.cnn.epochs);
        read_opt(n, "lr", c.cnn.lr);
        read_opt(n, "augment", c.cnn.augment);
        if (n.contains("activation")) {
          c.cnn.activation = activation_from_string(n.at("activation").get<std::string>());
        }
        if (n.contains("flip_axis")) {
          c.cnn.conv.flip_axis = flip_axis_from_string(n.at("flip_axis").get<std::string>());
        }
      }
      c.synth.axis = c.cnn.conv.flip_axis;
      if (j.contains("data")) {
        const json& d = j.at("data");
        if (d.contains("dir")) c.data_dir = fs::path(d.at("dir").get<std::string>());
        read_opt(d, "classes", c.classes);
        read_opt(d, "per_class", c.per_class);
        read_opt(d, "height", c.height);
        read_opt(d, "width", c.width);
        read_opt(d, "noise_std", c.synth.noise_std);
        read_opt(d, "asymmetric_noise", c.synth.asymmetric_noise);
        read_opt(d, "sample_seed", c.synth.sample_seed);
      }
      c.cnn.conv.validate();
    }

    if (task == Task::audit) {
      if (j.contains("activations")) {
        for (const auto& a : j.at("activations")) {
          c.activations.push_back(activation_from_string(a.get<std::string>()));
        }
      }
      if (j.contains("audit")) {
        const json& a = j.at("audit");
        read_opt(a, "b_min", c.audit.b_min);
        read_opt(a, "b_max", c.audit.b_max);
        read_opt(a, "b_step", c.audit.b_step);
        read_opt(a, "z_max", c.audit.z_max);
        read_opt(a, "z_points", c.audit.z_points);
        read_opt(a, "tol", c.audit.tol);
        read_opt(a, "parity", c.audit.parity);
      }
      if (c.audit.parity != 1 && c.audit.parity != -1) throw ConfigError("audit parity must be ±1");
    }

    if (j.contains("spec_path")) c.spec_path = fs::path(j.at("spec_path").get<std::string>());
    if (j.contains("model_path")) c.model_path = fs::path(j.at("model_path").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  if ((task == Task::toy1d || task == Task::toy2d) && !is_mlp_model(c.model)) {
    throw ConfigError("unknown model '" + c.model + "' for " + to_string(task));
  }
  if (c.repeats == 0) throw ConfigError("repeats must be at least 1");
  return c;
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o) {
  if (const char* env = std::getenv("INVOLUTE_OUT"); env && *env) cfg.out_dir = env;
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) {
    cfg.train.seed = *o.seed;
    cfg.hnn.seed = *o.seed;
    cfg.spring.seed = *o.seed;
    cfg.cnn.seed = *o.seed;
  }
  if (o.epochs) {
    cfg.train.epochs = *o.epochs;
    cfg.hnn.epochs = *o.epochs;
    cfg.cnn.epochs = *o.epochs;
  }
  if (o.spec) cfg.spec_path = *o.spec;
  if (o.model) cfg.model_path = *o.model;
  if (o.activation) cfg.activations = {activation_from_string(*o.activation)};
}

// --- shared helpers ---------------------------------------------------------

namespace {

struct Generator {
  std::function<Vector(std::span<const double>)> apply;
  int parity;
};

// One generator per independent involution of the symmetry, lifted to the
// full input.
std::vector<Generator> generators(const Symmetry& s) {
  std::vector<Generator> out;
  if (const auto* spec = std::get_if<InvolutorySpec>(&s)) {
    out.push_back({[spec = *spec](std::span<const double> x) { return spec.apply(x); }, spec->parity()});
    return out;
  }
  for (const auto& block : std::get<BlockInvarianceSpec>(s).blocks()) {
    out.push_back({[block](std::span<const double> x) {
                     Vector y(x.begin(), x.end());
                     const Vector img = block.spec.apply(x.subspan(block.offset, block.spec.dim()));
                     std::copy(img.begin(), img.end(), y.begin() + static_cast<std::ptrdiff_t>(block.offset));
                     return y;
                   },
                   block.spec.parity()});
  }
  return out;
}

// Mean squared invariance residual, summed over generators.
double violation(const Evaluator& f, std::span<const Vector> points, const Symmetry& s) {
  double total = 0.0;
  for (const Generator& g : generators(s)) {
    double sum = 0.0;
    for (const Vector& x : points) {
      const double d = f(x) - g.parity * f(g.apply(x));
      sum += d * d;
    }
    total += sum / static_cast<double>(points.size());
  }
  return total;
}

Symmetry parse_symmetry(const json& j) {
  if (j.contains("blocks")) return block_spec_from_json(j);
  return involutory_spec_from_json(j);
}

ModelOptions model_options(const ExperimentConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
  ModelOptions o;
  o.kind = model_kind_from_string(cfg.model);
  o.input_dim = input_dim;
  o.hidden = cfg.train.hidden;
  o.activation = cfg.train.activation;
  o.san_activation = cfg.san_activation;
  o.seed = seed;
  return o;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

struct ToyRun {
  std::vector<RunRecord> records;
  double final_loss = 0.0;
  double violation = 0.0;
  SymmetricModel model;
};

ToyRun train_toy(const ExperimentConfig& cfg, const Symmetry& sym, const Dataset& data,
                 std::span<const Vector> validation, std::size_t input_dim, std::uint64_t seed) {
  ToyRun run{{}, 0.0, 0.0, build_model(model_options(cfg, input_dim, seed), sym)};
  PassCounter counter;
  fit_mse(run.model, data, cfg.train.epochs, cfg.train.lr, counter,
          [&](const EpochStats& s, const SymmetricModel& m) {
            const auto start = std::chrono::steady_clock::now();
            const double v = violation(m.evaluator(), validation, sym);
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            run.records.push_back(RunRecord{s.epoch, s.train_loss, v, counter.trunk_evals, ms});
          });
  PassCounter scratch;
  run.final_loss = dataset_mse(run.model, data, scratch);
  run.violation = violation(run.model.evaluator(), validation, sym);
  return run;
}

// Grid symmetric about zero to the last bit: point n−1−i is −(point i).
std::vector<double> symmetric_axis(double range, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = n == 1 ? 0.0 : -range + 2.0 * range * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  for (std::size_t i = 0; i < n / 2; ++i) xs[n - 1 - i] = -xs[i];
  if (n % 2 == 1) xs[n / 2] = 0.0;
  return xs;
}

}  // namespace

// --- toy1d ------------------------------------------------------------------

RunSummary cmd_toy1d(const ExperimentConfig& cfg) {
  const Symmetry sym = cfg.spec ? parse_symmetry(*cfg.spec) : Symmetry{InvolutorySpec::inversion(1, 1)};
  fs::create_directories(cfg.out_dir);
  const std::vector<Vector> validation =
      uniform_grid_1d(-cfg.validation_range, cfg.validation_range, cfg.validation_points);

  RunSummary summary;
  std::vector<double> losses, violations;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.train.seed + r;
    std::mt19937_64 rng(seed ^ 0xda7a5eedULL);
    std::uniform_real_distribution<double> uni(-cfg.sample_range, cfg.sample_range);
    std::normal_distribution<double> noise(0.0, cfg.train.noise_std);
    Dataset data;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      const double x = uni(rng);
      data.inputs.push_back({x});
      data.targets.push_back(std::cos(x) + (cfg.train.noise_std > 0.0 ? noise(rng) : 0.0));
    }
    ToyRun run = train_toy(cfg, sym, data, validation, 1, seed);
    const std::string stem = "toy1d_" + cfg.model + "_r" + std::to_string(r);
    emit_csv(run.records, cfg.out_dir / (stem + ".csv"));
    json mj;
    to_json(mj, run.model);
    write_json(cfg.out_dir / (stem + "_model.json"), mj);
    summary.artifacts.push_back(cfg.out_dir / (stem + ".csv"));
    summary.artifacts.push_back(cfg.out_dir / (stem + "_model.json"));
    losses.push_back(run.final_loss);
    violations.push_back(run.violation);
  }

  const fs::path table = cfg.out_dir / ("toy1d_" + cfg.model + "_summary.csv");
  auto out = open_out(table);
  out << "repeat,train_loss,train_loss_std,violation,violation_std\n";
  for (std::size_t r = 0; r < losses.size(); ++r) {
    out << r << ',' << format_double(losses[r]) << ",0," << format_double(violations[r]) << ",0\n";
  }
  const auto [lm, ls] = mean_std(losses);
  const auto [vm, vs] = mean_std(violations);
  out << "all," << format_double(lm) << ',' << format_double(ls) << ',' << format_double(vm) << ','
      << format_double(vs) << '\n';
  summary.artifacts.push_back(table);
  summary.lines.push_back("model=" + cfg.model + " repeats=" + std::to_string(cfg.repeats) +
                          " train_loss=" + format_double(lm) + "±" + format_double(ls) +
                          " violation=" + format_summary_number(vm) + "±" + format_summary_number(vs));
  return summary;
}

// --- toy2d ------------------------------------------------------------------

RunSummary cmd_toy2d(const ExperimentConfig& cfg) {
  Symmetry sym = InvolutorySpec::inversion(2, cfg.target == Toy2dTarget::sin_sum ? -1 : 1);
  const Matrix swap{{0.0, 1.0}, {1.0, 0.0}};
  if (cfg.spec) {
    sym = parse_symmetry(*cfg.spec);
  } else if (cfg.model == "san") {
    sym = InvolutorySpec(swap, 1);
  } else if (cfg.target == Toy2dTarget::sin_product && (cfg.model == "iptn" || cfg.model == "hub-multi")) {
    const std::size_t dims[] = {0, 1};
    const int parities[] = {-1, -1};
    sym = BlockInvarianceSpec::sign_flips(2, dims, parities);
  }
  const auto f = [&](double x, double y) {
    return cfg.target == Toy2dTarget::sin_sum ? std::sin(x) + std::sin(y) : std::sin(x) * std::sin(y);
  };

  fs::create_directories(cfg.out_dir);
  const std::uint64_t seed = cfg.train.seed;
  std::mt19937_64 rng(seed ^ 0xda7a5eedULL);
  std::uniform_real_distribution<double> uni(-cfg.sample_range, cfg.sample_range);
  std::normal_distribution<double> noise(0.0, cfg.train.noise_std);
  Dataset data;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const double x = uni(rng), y = uni(rng);
    data.inputs.push_back({x, y});
    data.targets.push_back(f(x, y) + (cfg.train.noise_std > 0.0 ? noise(rng) : 0.0));
  }
  const std::vector<double> axis = symmetric_axis(cfg.validation_range, cfg.resolution);
  std::vector<Vector> grid;
  for (double x : axis) {
    for (double y : axis) grid.push_back({x, y});
  }

  ToyRun run = train_toy(cfg, sym, data, grid, 2, seed);
  const std::string stem = "toy2d_" + cfg.model;
  emit_csv(run.records, cfg.out_dir / (stem + ".csv"));
  const Evaluator eval = run.model.evaluator();
  const fs::path grid_path = cfg.out_dir / (stem + "_grid.csv");
  {
    auto out = open_out(grid_path);
    out << "x,y,pred\n";
    for (const Vector& pt : grid) {
      out << format_double(pt[0]) << ',' << format_double(pt[1]) << ',' << format_double(eval(pt)) << '\n';
    }
  }
  double residual = 0.0;
  for (const Generator& g : generators(sym)) {
    for (const Vector& pt : grid) residual = std::max(residual, std::fabs(eval(g.apply(pt)) - g.parity * eval(pt)));
  }
  json mj;
  to_json(mj, run.model);
  write_json(cfg.out_dir / (stem + "_model.json"), mj);
  RunSummary summary;
  summary.artifacts = {cfg.out_dir / (stem + ".csv"), grid_path, cfg.out_dir / (stem + "_model.json")};
  summary.lines.push_back("model=" + cfg.model + " train_loss=" + format_double(run.final_loss) +
                          " violation=" + format_summary_number(run.violation) +
                          " max_grid_residual=" + format_summary_number(residual));
  return summary;
}

// --- hnn --------------------------------------------------------------------

RunSummary cmd_hnn(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  RunSummary summary;
  std::vector<std::pair<std::string, bool>> variants;
  if (cfg.model == "vn" || cfg.model == "both") variants.emplace_back("baseline", false);
  if (cfg.model == "iptn" || cfg.model == "both") variants.emplace_back("ipt", true);

  const fs::path table = cfg.out_dir / "hnn_summary.csv";
  std::ostringstream rows;
  rows << "variant,final_loss,coordinate_mse,energy_variance,violation,diverged\n";
  bool wrote_reference = false;
  for (const auto& [name, ipt] : variants) {
    HnnResult res = run_hnn_experiment(cfg.spring, ipt, cfg.hnn);
    const std::string stem = "hnn_" + name;
    emit_csv(res.records, cfg.out_dir / (stem + ".csv"));
    emit_trajectory_csv(res.trajectory, cfg.out_dir / (stem + "_trajectory.csv"));
    json mj;
    to_json(mj, res.model.net());
    write_json(cfg.out_dir / (stem + "_model.json"), mj);
    summary.artifacts.push_back(cfg.out_dir / (stem + ".csv"));
    summary.artifacts.push_back(cfg.out_dir / (stem + "_trajectory.csv"));
    summary.artifacts.push_back(cfg.out_dir / (stem + "_model.json"));
    if (!wrote_reference) {
      emit_trajectory_csv(res.reference, cfg.out_dir / "hnn_reference.csv");
      summary.artifacts.push_back(cfg.out_dir / "hnn_reference.csv");
      wrote_reference = true;
    }
    const double v = res.records.empty() ? 0.0 : res.records.back().violation;
    rows << name << ',' << format_double(res.final_loss) << ',' << format_double(res.coordinate_mse)
         << ',' << format_double(res.energy_variance) << ',' << format_double(v) << ','
         << (res.trajectory.diverged ? 1 : 0) << '\n';
    summary.lines.push_back(name + " final_loss=" + format_double(res.final_loss) +
                            " coordinate_mse=" + format_double(res.coordinate_mse) +
                            " energy_variance=" + format_double(res.energy_variance) +
                            " violation=" + format_summary_number(v) +
                            (res.trajectory.diverged ? " diverged" : ""));
  }
  auto out = open_out(table);
  out << rows.str();
  summary.artifacts.push_back(table);
  return summary;
}

// --- cnn --------------------------------------------------------------------

RunSummary cmd_cnn(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const LabelledImages data =
      cfg.data_dir ? load_pgm_directory(*cfg.data_dir)
                   : synth_symmetric_dataset(cfg.classes, cfg.per_class, cfg.height, cfg.width,
                                             cfg.cnn.seed, cfg.synth);
  const CnnTrainResult res = cnn_train(data, cfg.cnn);
  const std::string stem = "cnn_" + cfg.model;
  emit_csv(res.records, cfg.out_dir / (stem + ".csv"));
  json mj;
  to_json(mj, res.model);
  write_json(cfg.out_dir / (stem + "_model.json"), mj);
  const double flip = cnn_flip_violation(res.model, data.images, cfg.cnn.conv.flip_axis);
  const double acc = accuracy(res.model, data);
  RunSummary summary;
  summary.artifacts = {cfg.out_dir / (stem + ".csv"), cfg.out_dir / (stem + "_model.json")};
  if (res.single_class) summary.lines.push_back("warning: training set has a single class");
  summary.lines.push_back("model=" + cfg.model + " accuracy=" + format_summary_number(acc));
  summary.lines.push_back("flip_violation=" + format_summary_number(flip));
  return summary;
}

// --- pid-check / eval ---------------------------------------------------------

namespace {

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<Vector> read_vectors(std::istream& in) {
  std::vector<Vector> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    Vector v;
    std::string tok;
    while (row >> tok) {
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw FormatError("not a number: '" + tok + "'");
      v.push_back(d);
    }
    if (!v.empty()) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

RunSummary cmd_pid_check(const ExperimentConfig& cfg, std::istream& vectors) {
  const json sj = cfg.spec_path ? load_json_file(*cfg.spec_path)
                  : cfg.spec    ? *cfg.spec
                                : throw ConfigError("pid-check needs a spec (--spec or \"spec\")");
  const InvolutorySpec spec = involutory_spec_from_json(sj);
  fs::create_directories(cfg.out_dir);
  RunSummary summary;
  const fs::path path = cfg.out_dir / "pid_check.csv";
  auto out = open_out(path);
  out << "index,label,on_boundary\n";
  std::size_t i = 0;
  for (const Vector& v : read_vectors(vectors)) {
    if (v.size() != spec.dim()) {
      throw DimensionMismatch("vector " + std::to_string(i) + " has " + std::to_string(v.size()) +
                              " entries, spec expects " + std::to_string(spec.dim()));
    }
    const Membership m = classify_traced(v, spec);
    out << i++ << ',' << to_string(m.label) << ',' << (m.on_boundary ? 1 : 0) << '\n';
    summary.lines.emplace_back(to_string(m.label));
  }
  summary.artifacts.push_back(path);
  return summary;
}

RunSummary cmd_eval(const ExperimentConfig& cfg, std::istream& vectors) {
  if (!cfg.model_path) throw ConfigError("eval needs a model file (--model or \"model_path\")");
  const SymmetricModel model = model_from_json(load_json_file(*cfg.model_path));
  const Evaluator f = model.evaluator();
  RunSummary summary;
  for (const Vector& v : read_vectors(vectors)) {
    if (v.size() != model.input_dim()) throw DimensionMismatch("input width does not match the model");
    summary.lines.push_back(format_double(f(v)));
  }
  return summary;
}

// --- audit ------------------------------------------------------------------

RunSummary cmd_audit(const ExperimentConfig& cfg) {
  std::vector<ActivationKind> kinds = cfg.activations;
  if (kinds.empty()) {
    for (ActivationKind k : all_activations()) {
      if (k != ActivationKind::identity) kinds.push_back(k);
    }
  }
  fs::create_directories(cfg.out_dir);
  const char tag = cfg.audit.parity > 0 ? '+' : '-';
  RunSummary summary;
  const fs::path path = cfg.out_dir / "audit.csv";
  auto out = open_out(path);
  out << "activation,parity,b_star\n";
  for (ActivationKind k : kinds) {
    const UnsafePointReport rep = audit_activation(k, cfg.audit);
    std::string line = std::string(to_string(k)) + ": ";
    if (!rep.unsafe()) {
      line += std::string("SAFE") + tag;
      out << to_string(k) << ',' << cfg.audit.parity << ",\n";
    } else {
      line += std::string("UNSAFE") + tag + " at b*=";
      for (std::size_t i = 0; i < rep.unsafe_biases.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", rep.unsafe_biases[i] == 0.0 ? 0.0 : rep.unsafe_biases[i]);
        line += (i ? "," : "") + std::string(buf);
        out << to_string(k) << ',' << cfg.audit.parity << ',' << format_double(rep.unsafe_biases[i]) << '\n';
      }
    }
    summary.lines.push_back(line);
  }
  summary.artifacts.push_back(path);
  return summary;
}

// --- dispatch ---------------------------------------------------------------

RunSummary run_experiment(const ExperimentConfig& cfg, std::istream& in, std::ostream& out) {
  RunSummary s;
  switch (cfg.task) {
    case Task::toy1d: s = cmd_toy1d(cfg); break;
    case Task::toy2d: s = cmd_toy2d(cfg); break;
    case Task::hnn: s = cmd_hnn(cfg); break;
    case Task::cnn: s = cmd_cnn(cfg); break;
    case Task::pid_check: s = cmd_pid_check(cfg, in); break;
    case Task::audit: s = cmd_audit(cfg); break;
    case Task::eval: s = cmd_eval(cfg, in); break;
  }
  for (const auto& line : s.lines) out << line << '\n';
  if (cfg.task != Task::eval) {
    json manifest{{"task", to_string(cfg.task)},
                  {"config_hash", fnv1a_hex(cfg.raw.dump())},
                  {"seed", cfg.train.seed},
                  {"artifacts", json::array()},
                  {"summary", s.lines}};
    for (const auto& a : s.artifacts) manifest["artifacts"].push_back(a.filename().string());
    const fs::path mpath = cfg.out_dir / (std::string(to_string(cfg.task)) + "_manifest.json");
    write_json(mpath, manifest);
    s.artifacts.push_back(mpath);
  }
  return s;
}

}  // namespace involute
