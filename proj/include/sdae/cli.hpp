#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sdae/experiments.hpp"
#include "sdae/model.hpp"
#include "sdae/stepper.hpp"

namespace sdae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitValidation = 4;

struct ModelConfig {
  std::string name;         // pendulum | fiber | langevin
  double c_g = 0.0;         // 0 = model default
  double c_gravity = 1.0;   // pendulum
  int num_points = 3;       // fiber
  double ds = 1.0;          // fiber
  FiberForces forces;       // fiber
  double friction = 1.0;    // langevin
  double sigma = 1.0;       // langevin
  double well = 1.0;        // langevin double-well strength
  std::string mutation;     // "" or "dg_sign_flip" (validator self-test)
};

struct RunConfig {
  ModelConfig model;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  Interp interp = Interp::kConstant;
  int threads = 0;
  std::string out_dir = "out";
  StepperConfig stepper;

  int simulate_n = 0;

  std::vector<int> resolutions;
  int n_ref = 0;
  int samples = 0;
  double p = 2.0;

  std::vector<int> compare_resolutions;
  int compare_samples = 0;

  int validate_samples = 100;
  double validate_fd_step = 1e-5;
  bool cg_failure_fatal = false;

  std::string echo_json;  ///< effective config, re-serialized
};

/// Flag overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::string> interp;
};

/// Parses and validates the config file. Throws ConfigError with the
/// offending key on any schema violation.
RunConfig load_config(const std::string& path, const Overrides& overrides);

/// Instantiates the configured built-in model.
SdaeProblem build_model(const ModelConfig& model);

// Subcommand drivers; each returns a process exit code.
int cmd_simulate(const RunConfig& config);
int cmd_converge(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_validate(const RunConfig& config);

}  // namespace sdae::cli
