#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdae/cli.hpp"
#include "sdae/errors.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::string seed_text;
  std::string out_dir;
  int threads = -1;
  std::string interp;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_path, "config file (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed_text, "override the config seed");
  cmd->add_option("--out", flags.out_dir, "override the output directory");
  cmd->add_option("--threads", flags.threads,
                  "worker threads (0 = all hardware threads)");
  cmd->add_option("--interp", flags.interp,
                  "interpolation mode: constant | linear");
}

sdae::cli::Overrides to_overrides(const Flags& flags) {
  sdae::cli::Overrides ov;
  if (!flags.seed_text.empty()) {
    try {
      ov.seed = std::stoull(flags.seed_text);
    } catch (const std::exception&) {
      throw sdae::ConfigError("--seed must be an unsigned integer");
    }
  }
  if (!flags.out_dir.empty()) ov.out_dir = flags.out_dir;
  if (flags.threads >= 0) ov.threads = flags.threads;
  if (!flags.interp.empty()) ov.interp = flags.interp;
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained stochastic mechanical systems: half-explicit "
               "drift-truncated Euler scheme, reference integrators and "
               "Monte Carlo convergence studies"};
  app.require_subcommand(1);

  Flags flags;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "integrate one trajectory and write it as CSV");
  CLI::App* converge = app.add_subcommand(
      "converge", "run the coupled self-convergence study");
  CLI::App* compare = app.add_subcommand(
      "compare", "compare against the truncated explicit Euler baseline");
  CLI::App* validate = app.add_subcommand(
      "validate", "check model derivatives, initial data and growth bounds");
  for (CLI::App* cmd : {simulate, converge, compare, validate})
    add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sdae::cli::kExitConfig;
  }

  try {
    const sdae::cli::RunConfig config =
        sdae::cli::load_config(flags.config_path, to_overrides(flags));
    if (simulate->parsed()) return sdae::cli::cmd_simulate(config);
    if (converge->parsed()) return sdae::cli::cmd_converge(config);
    if (compare->parsed()) return sdae::cli::cmd_compare(config);
    return sdae::cli::cmd_validate(config);
  } catch (const sdae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sdae::cli::kExitConfig;
  } catch (const sdae::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sdae::cli::kExitSolver;
  }
}
