#include "involute/metrics.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "involute/error.hpp"

namespace involute {

namespace {
constexpr const char* kCsvHeader = "epoch,train_loss,violation,trunk_evals,wall_ms";
}

double violation_metric(const Evaluator& model, std::span<const Vector> points, const Matrix& a,
                        int parity) {
  if (points.empty()) throw Error("violation_metric: empty point set");
  double sum = 0.0;
  for (const Vector& x : points) {
    const double d = model(x) - parity * model(matvec(a, x));
    sum += d * d;
  }
  return sum / static_cast<double>(points.size());
}

std::vector<Vector> uniform_grid_1d(double lo, double hi, std::size_t m) {
  std::vector<Vector> pts;
  pts.reserve(m);
  if (m == 1) {
    pts.push_back({0.5 * (lo + hi)});
    return pts;
  }
  for (std::size_t i = 0; i < m; ++i) {
    pts.push_back({lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1)});
  }
  return pts;
}

const char* to_string(FlipAxis axis) {
  return axis == FlipAxis::horizontal ? "horizontal" : "vertical";
}

FlipAxis flip_axis_from_string(std::string_view name) {
  if (name == "horizontal") return FlipAxis::horizontal;
  if (name == "vertical") return FlipAxis::vertical;
  throw ConfigError("unknown flip axis '" + std::string(name) + "'");
}

void write_csv(std::span<const RunRecord> records, std::ostream& out) {
  if (records.empty()) throw Error("emit_csv: no records");
  out << kCsvHeader << '\n';
  std::size_t last = 0;
  for (const RunRecord& r : records) {
    if (r.epoch <= last && &r != &records.front()) {
      throw Error("run records must have strictly increasing epochs");
    }
    last = r.epoch;
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.violation)
        << ',' << r.trunk_evals << ',' << format_double(r.wall_ms) << '\n';
  }
}

void emit_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(records, out);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw FormatError("bad run-record header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell[5];
    for (auto& c : cell) {
      if (!std::getline(row, c, ',')) throw FormatError("short run-record row: " + line);
    }
    RunRecord r;
    r.epoch = std::stoull(cell[0]);
    r.train_loss = std::stod(cell[1]);
    r.violation = std::stod(cell[2]);
    r.trunk_evals = std::stoull(cell[3]);
    r.wall_ms = std::stod(cell[4]);
    out.push_back(r);
  }
  return out;
}

}  // namespace involute
