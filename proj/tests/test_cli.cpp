#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "involute/error.hpp"
#include "involute/experiment.hpp"

using namespace involute;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("involute_cli_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Drops the last (wall-clock) column of a run-record CSV.
std::string without_wall_clock(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

RunSummary run(const json& cfg_json, Task task, const fs::path& out, const std::string& stdin_text = "") {
  ExperimentConfig cfg = parse_config(cfg_json, task);
  cfg.out_dir = out;
  std::istringstream in(stdin_text);
  std::ostringstream sink;
  return run_experiment(cfg, in, sink);
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK(parse_config(json::object(), Task::toy1d).model == "vn");
  CHECK(parse_config(json::object(), Task::cnn).model == "ikcnn");
  CHECK(parse_config(json::object(), Task::toy2d).samples == 400);
  const auto c = parse_config(json::parse(R"({"model": "san", "seed": 4, "train": {"epochs": 7, "hidden": [3]}})"), Task::toy1d);
  CHECK(c.train.seed == 4);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.hidden == std::vector<std::size_t>{3});
  CHECK_THROWS_AS(parse_config(json::parse(R"({"model": "resnet"})"), Task::toy1d), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"train": {"epochs": "many"}})"), Task::toy1d), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"task": "hnn"})"), Task::toy1d), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"model": "vcnn", "cnn": {"kernel_size": 4}})"), Task::cnn), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"train": {"activation": "relu"}})"), Task::hnn), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse("[1]"), Task::toy1d), ConfigError);
  CHECK(task_from_string("pid-check") == Task::pid_check);
}

TEST_CASE("overrides and INVOLUTE_OUT") {
  ExperimentConfig c = parse_config(json::parse(R"({"out_dir": "from_config"})"), Task::toy1d);
  ::setenv("INVOLUTE_OUT", "from_env", 1);
  apply_overrides(c, {});
  CHECK(c.out_dir == "from_env");
  CliOverrides o;
  o.out = "from_flag";
  o.seed = 9;
  apply_overrides(c, o);
  CHECK(c.out_dir == "from_flag");
  CHECK(c.train.seed == 9);
  ::unsetenv("INVOLUTE_OUT");
}

TEST_CASE("helpers") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  const double v[] = {1.0, 3.0};
  CHECK(mean_std(v).first == 2.0);
  CHECK(mean_std(v).second == doctest::Approx(std::sqrt(2.0)));
  CHECK(format_summary_number(0.0) == "0.0");
  CHECK(format_summary_number(0.25) == "0.25");
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(UnsupportedParity("x")) == 2);
  CHECK(exit_code_for(SingularMatrix(1)) == 3);
}

TEST_CASE("pid-check") {
  const fs::path out = fresh("pid");
  const json cfg = json::parse(R"({"spec": {"A": [[-1]], "parity": 1, "mu": null}})");
  const auto s = run(cfg, Task::pid_check, out, "-3\n\n2\n0\n");
  CHECK(s.lines == std::vector<std::string>{"S-", "S+", "S0"});
  CHECK(slurp(out / "pid_check.csv") == "index,label,on_boundary\n0,S-,0\n1,S+,0\n2,S0,1\n");
  const json manifest = json::parse(slurp(out / "pid-check_manifest.json"));
  CHECK(manifest["task"] == "pid-check");
  CHECK(manifest["config_hash"] == fnv1a_hex(cfg.dump()));
  CHECK(manifest["artifacts"][0] == "pid_check.csv");
  CHECK_THROWS_AS(run(cfg, Task::pid_check, out, "1 2\n"), DimensionMismatch);
  CHECK_THROWS_AS(run(cfg, Task::pid_check, out, "abc\n"), FormatError);
  CHECK_THROWS_AS(run(json::object(), Task::pid_check, out), ConfigError);
}

TEST_CASE("audit") {
  const fs::path out = fresh("audit");
  const auto s = run(json::parse(R"({"activations": ["sigmoid", "relu"]})"), Task::audit, out);
  REQUIRE(s.lines.size() == 2);
  CHECK(s.lines[0].find("UNSAFE+ at b*=0") != std::string::npos);
  CHECK(s.lines[1] == "relu: SAFE+");
}

TEST_CASE("toy1d: deterministic CSVs, summary rows, IPT zero violation") {
  const json cfg = json::parse(R"({"model": "iptn", "repeats": 3, "train": {"epochs": 40}})");
  const fs::path a = fresh("toy1d_a"), b = fresh("toy1d_b");
  run(cfg, Task::toy1d, a);
  run(cfg, Task::toy1d, b);
  for (int r = 0; r < 3; ++r) {
    const std::string name = "toy1d_iptn_r" + std::to_string(r) + ".csv";
    CHECK(without_wall_clock(slurp(a / name)) == without_wall_clock(slurp(b / name)));
    CHECK(slurp(a / ("toy1d_iptn_r" + std::to_string(r) + "_model.json")) ==
          slurp(b / ("toy1d_iptn_r" + std::to_string(r) + "_model.json")));
  }
  const std::string summary = slurp(a / "toy1d_iptn_summary.csv");
  CHECK(summary == slurp(b / "toy1d_iptn_summary.csv"));
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
  std::istringstream rows(summary);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = line.find(',', pos) + 1;
    CHECK(line.substr(pos) == "0,0");
  }
  CHECK(slurp(a / "toy1d_manifest.json") == slurp(b / "toy1d_manifest.json"));

  // a saved model re-evaluates through the eval subcommand
  ExperimentConfig ev = parse_config(json::object(), Task::eval);
  ev.model_path = a / "toy1d_iptn_r0_model.json";
  std::istringstream in("1.5\n-1.5\n");
  const auto preds = cmd_eval(ev, in);
  REQUIRE(preds.lines.size() == 2);
  CHECK(preds.lines[0] == preds.lines[1]);
}

TEST_CASE("toy2d grid is antisymmetric row for row") {
  const fs::path out = fresh("toy2d");
  const json cfg = json::parse(R"({"model": "hub-multi", "target": "sin_product", "resolution": 6, "samples": 50, "train": {"epochs": 20}})");
  run(cfg, Task::toy2d, out);
  std::istringstream in(slurp(out / "toy2d_hub-multi_grid.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,pred");
  std::vector<std::tuple<double, double, double>> rows;
  while (std::getline(in, line)) {
    std::istringstream r(line);
    std::string xs, ys, ps;
    std::getline(r, xs, ',');
    std::getline(r, ys, ',');
    std::getline(r, ps, ',');
    rows.emplace_back(std::stod(xs), std::stod(ys), std::stod(ps));
  }
  CHECK(rows.size() == 36);
  for (const auto& [x, y, p] : rows) {
    for (const auto& [x2, y2, p2] : rows) {
      if (x2 == -x && y2 == y) CHECK(p2 == -p);
    }
  }
  const json vn = json::parse(R"({"model": "vn", "resolution": 6, "samples": 50, "train": {"epochs": 20}})");
  const auto s = run(vn, Task::toy2d, fresh("toy2d_vn"));
  const std::string key = "max_grid_residual=";
  CHECK(std::stod(s.lines[0].substr(s.lines[0].find(key) + key.size())) > 0.0);
}

TEST_CASE("cnn and hnn subcommands") {
  const fs::path out = fresh("cnn");
  const json cfg = json::parse(R"({"model": "ikcnn", "cnn": {"epochs": 5, "num_filters": 2, "hidden": 8}, "data": {"classes": 3, "per_class": 3, "height": 10, "width": 10}})");
  const auto s = run(cfg, Task::cnn, out);
  CHECK(s.lines.back() == "flip_violation=0.0");

  const fs::path h = fresh("hnn");
  const json hc = json::parse(R"({"spring": {"samples": 50}, "train": {"epochs": 5, "hidden": [6]}, "rollout": {"steps": 20}})");
  const auto hs = run(hc, Task::hnn, h);
  REQUIRE(hs.lines.size() == 2);
  CHECK(hs.lines[1].find("violation=0.0") != std::string::npos);
  CHECK(slurp(h / "hnn_ipt_trajectory.csv").rfind("t,q,p,energy\n", 0) == 0);
  CHECK(fs::exists(h / "hnn_summary.csv"));
}

TEST_CASE("binary exit codes") {
  const std::string bin = INVOLUTE_CLI;
  const fs::path dir = fresh("exit");
  fs::create_directories(dir);
  std::ofstream(dir / "spec.json") << R"({"A": [[-1]], "parity": 1, "mu": null})";
  std::ofstream(dir / "bad.json") << R"({"A": [[1, 1], [0, 1]], "parity": 1})";
  std::ofstream(dir / "san_odd.json") << R"({"model": "san", "spec": {"A": [[-1]], "parity": -1}, "train": {"epochs": 1}})";
  const std::string quiet = " >" + (dir / "stdout.txt").string() + " 2>/dev/null";
  CHECK(shell("printf -- '-3\\n' | " + bin + " pid-check --spec " + (dir / "spec.json").string() + " -o " + dir.string() + quiet) == 0);
  CHECK(slurp(dir / "stdout.txt") == "S-\n");
  CHECK(shell(bin + " audit --activation sigmoid -o " + dir.string() + quiet) == 0);
  CHECK(slurp(dir / "stdout.txt") == "sigmoid: UNSAFE+ at b*=0\n");
  CHECK(shell(bin + " pid-check --spec " + (dir / "bad.json").string() + " -o " + dir.string() + quiet + " </dev/null") == 2);
  CHECK(shell(bin + " toy1d -c " + (dir / "san_odd.json").string() + " -o " + dir.string() + quiet) == 2);
  CHECK(shell(bin + " toy1d -c " + (dir / "missing.json").string() + quiet) == 2);
  CHECK(shell(bin + " nonsense" + quiet) == 2);
  CHECK(shell(bin + quiet) == 2);
}
