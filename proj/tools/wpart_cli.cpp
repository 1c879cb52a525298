#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wpart/error.hpp"
#include "wpart/io.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Configuration file")->required();
  cmd->add_option("--seed", c.seed, "Override optimizer.seed");
  cmd->add_option("--out", c.out, "Override output.dir");
}

wpart::io::RunConfig load(const Common& c) {
  auto config = wpart::io::load_config(c.config);
  if (c.seed) config.optimizer.seed = *c.seed;
  if (c.out) config.out_dir = *c.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted multi-phase partition solver and diagnostics"};
  app.require_subcommand(1);

  Common landscape_opts, partition_opts, diagnose_opts, oracle_opts;
  std::string labels;
  auto* landscape = app.add_subcommand("landscape", "Solve for the landscape function and the weight it induces");
  add_common(landscape, landscape_opts);
  auto* partition = app.add_subcommand("partition", "Minimize the partition energy");
  add_common(partition, partition_opts);
  auto* diagnose = app.add_subcommand("diagnose", "Write the regularity report of a label raster");
  add_common(diagnose, diagnose_opts);
  diagnose->add_option("--labels", labels, "Label raster to diagnose")->required();
  auto* oracle = app.add_subcommand("oracle", "Exhaustive minimization on small grids");
  add_common(oracle, oracle_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (landscape->parsed()) {
      wpart::io::cmd_landscape(load(landscape_opts), std::cout);
    } else if (partition->parsed()) {
      wpart::io::cmd_partition(load(partition_opts), std::cout);
    } else if (diagnose->parsed()) {
      wpart::io::cmd_diagnose(load(diagnose_opts), labels, std::cout);
    } else if (oracle->parsed()) {
      wpart::io::cmd_oracle(load(oracle_opts), std::cout);
    }
  } catch (const wpart::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\nrequired_assignments = " << e.required() << '\n';
    return wpart::exit_code(e);
  } catch (const wpart::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return wpart::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}
