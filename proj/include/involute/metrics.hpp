#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "involute/error.hpp"
#include "involute/linalg.hpp"
#include "involute/symmetry.hpp"

namespace involute {

struct RunRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double violation = 0.0;
  std::uint64_t trunk_evals = 0;
  // Informational only; excluded from determinism comparisons.
  double wall_ms = 0.0;
};

// V_p = (1/m)·Σ (model(x) − p·model(A·x))².
double violation_metric(const Evaluator& model, std::span<const Vector> points, const Matrix& a,
                        int parity);

// m evenly spaced points covering [lo, hi] (inclusive) as 1-vectors.
std::vector<Vector> uniform_grid_1d(double lo, double hi, std::size_t m);

enum class FlipAxis { horizontal, vertical };

const char* to_string(FlipAxis axis);
FlipAxis flip_axis_from_string(std::string_view name);

// Fraction of inputs whose predicted class changes when the input is
// mirrored. classify returns a class index; flip maps an input to its mirror.
template <class Input>
double flip_violation(const std::function<std::size_t(const Input&)>& classify,
                      std::span<const Input> inputs,
                      const std::function<Input(const Input&)>& flip);

void emit_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
void write_csv(std::span<const RunRecord> records, std::ostream& out);
std::vector<RunRecord> read_csv(std::istream& in);

template <class Input>
double flip_violation(const std::function<std::size_t(const Input&)>& classify,
                      std::span<const Input> inputs,
                      const std::function<Input(const Input&)>& flip) {
  if (inputs.empty()) throw Error("flip_violation: empty input set");
  std::size_t changed = 0;
  for (const Input& in : inputs) {
    if (classify(in) != classify(flip(in))) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(inputs.size());
}

}  // namespace involute
