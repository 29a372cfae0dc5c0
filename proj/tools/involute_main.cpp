#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "involute/error.hpp"
#include "involute/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  involute::CliOverrides overrides;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "experiment config (JSON)");
  sub->add_option("-o,--out", f.overrides.out, "output directory");
  sub->add_option("-s,--seed", f.overrides.seed, "base seed");
  sub->add_option("--epochs", f.overrides.epochs, "override the number of training epochs");
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw involute::ConfigError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw involute::ConfigError("config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"involute: networks invariant under involutory transformations"};
  app.require_subcommand(1);
  Flags flags;

  const std::pair<const char*, const char*> tasks[] = {
      {"toy1d", "learn cos x with the chosen model"},
      {"toy2d", "learn a 2-D toy function and emit a contour grid"},
      {"hnn", "Hamiltonian network on the ideal spring"},
      {"cnn", "flip-invariant CNN on a symmetric image set"},
      {"pid-check", "classify vectors from stdin into S0 / S+ / S-"},
      {"audit", "search activations for unsafe biases"},
      {"eval", "evaluate a saved model on vectors from stdin"},
  };
  for (const auto& [name, help] : tasks) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    if (std::string(name) == "pid-check") sub->add_option("--spec", flags.overrides.spec, "spec JSON");
    if (std::string(name) == "audit") sub->add_option("--activation", flags.overrides.activation, "single activation");
    if (std::string(name) == "eval") sub->add_option("--model", flags.overrides.model, "model JSON");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const std::string task = app.get_subcommands().front()->get_name();
    involute::ExperimentConfig cfg =
        involute::parse_config(load_config(flags.config), involute::task_from_string(task));
    involute::apply_overrides(cfg, flags.overrides);
    involute::run_experiment(cfg, std::cin, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return involute::exit_code_for(e);
  }
  return 0;
}
