#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "involute/arch.hpp"
#include "involute/cnn.hpp"
#include "involute/nn.hpp"
#include "involute/physics.hpp"

namespace involute {

enum class Task { toy1d, toy2d, hnn, cnn, pid_check, audit, eval };

const char* to_string(Task task);
Task task_from_string(std::string_view name);

enum class Toy2dTarget { sin_sum, sin_product };

// Everything a subcommand needs. Unset task-specific sections keep their
// defaults; `raw` is the JSON the config was parsed from (hashed into the
// manifest).
struct ExperimentConfig {
  Task task = Task::toy1d;
  std::string model = "vn";
  std::optional<nlohmann::json> spec;
  TrainConfig train;
  std::size_t repeats = 1;
  std::filesystem::path out_dir = "out";

  // toy1d / toy2d
  std::size_t samples = 100;
  double sample_range = 1.5;
  std::size_t validation_points = 200;
  double validation_range = 3.0;
  std::size_t resolution = 40;
  Toy2dTarget target = Toy2dTarget::sin_sum;
  ActivationKind san_activation = ActivationKind::swish;

  // hnn
  SpringConfig spring;
  HnnTrainConfig hnn;

  // cnn
  CnnTrainConfig cnn;
  std::optional<std::filesystem::path> data_dir;
  std::size_t classes = 6;
  std::size_t per_class = 10;
  std::size_t height = 16;
  std::size_t width = 16;
  // Symmetric class templates, images individually asymmetric.
  SynthOptions synth{FlipAxis::horizontal, 0.1, 0.3, 0};

  // audit
  std::vector<ActivationKind> activations;
  AuditOptions audit;

  // pid-check / eval
  std::optional<std::filesystem::path> spec_path;
  std::optional<std::filesystem::path> model_path;

  nlohmann::json raw = nlohmann::json::object();
};

// Throws ConfigError on unknown keys' bad values or incompatible model/task.
ExperimentConfig parse_config(const nlohmann::json& j, Task task);

struct CliOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> spec;
  std::optional<std::filesystem::path> model;
  std::optional<std::string> activation;
  std::optional<std::size_t> epochs;
};

// Applies flag overrides; the output directory resolves as --out, then
// $INVOLUTE_OUT, then the config value.
void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides);

struct RunSummary {
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> lines;
};

RunSummary cmd_toy1d(const ExperimentConfig& cfg);
RunSummary cmd_toy2d(const ExperimentConfig& cfg);
RunSummary cmd_hnn(const ExperimentConfig& cfg);
RunSummary cmd_cnn(const ExperimentConfig& cfg);
RunSummary cmd_pid_check(const ExperimentConfig& cfg, std::istream& vectors);
RunSummary cmd_audit(const ExperimentConfig& cfg);
RunSummary cmd_eval(const ExperimentConfig& cfg, std::istream& vectors);

// Dispatches on cfg.task, writes manifest.json next to the artifacts and
// prints the summary lines to out.
RunSummary run_experiment(const ExperimentConfig& cfg, std::istream& in, std::ostream& out);

// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Maps an exception to the process exit code: 2 for configuration and
// input errors, 3 for numerical failures.
int exit_code_for(const std::exception& e);

// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_std(std::span<const double> values);

// "0.0" for exact integers, 17 significant digits otherwise.
std::string format_summary_number(double v);

}  // namespace involute
