#include "opflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char **argv) {
  CLI::App app{"Orthogonality preserving gradient flow solver"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print the version and exit");

  std::string config;
  std::string output_dir;
  const auto add = [&](const char *name, const char *help) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "Experiment config file")->required();
    sub->add_option("--output-dir", output_dir, "Override output_dir from the config");
    return sub;
  };
  auto *run = add("run", "Run one solver and write trace.csv and summary.json");
  auto *compare = add("compare", "Run two solvers from the same start and write compare.csv");
  auto *sweep = add("sweep", "Run a dt / inner-iteration grid and write index.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : opflow::cli::kExitConfigError;
  }

  if (version) {
    std::cout << "flow " << OPFLOW_VERSION << '\n';
    return 0;
  }
  const std::optional<std::string> dir =
      output_dir.empty() ? std::nullopt : std::optional<std::string>(output_dir);
  if (run->parsed()) return opflow::cli::cmd_run(config, dir);
  if (compare->parsed()) return opflow::cli::cmd_compare(config, dir);
  if (sweep->parsed()) return opflow::cli::cmd_sweep(config, dir);
  std::cerr << app.help();
  return opflow::cli::kExitConfigError;
}
