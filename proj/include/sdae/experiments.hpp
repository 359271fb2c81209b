#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdae/stepper.hpp"
#include "sdae/stochastics.hpp"

namespace sdae {

/// Discrete solution on the grid t_k = k T / N together with the running
/// multiplier sum mu_k and per-step diagnostics.
struct Trajectory {
  double horizon = 0.0;
  int steps = 0;
  std::vector<State> states;       ///< steps + 1
  std::vector<Vec> mu;             ///< steps + 1, mu[0] = 0
  std::vector<StepRecord> records; ///< steps

  double time_at(int k) const {
    return horizon * static_cast<double>(k) / steps;
  }
};

/// Runs the constrained stepper over increments_at(path, n).
/// Fails fast with StepFailure carrying the step index.
Trajectory integrate(const SdaeProblem& problem, const StepperConfig& config,
                     int n, const BrownianPath& path);

enum class Interp { kConstant, kLinear };

/// Pathwise-uniform deviations between a coarse and a fine trajectory on
/// the fine grid, per component. The aggregator applies the power p.
struct PathwiseError {
  double r = 0.0;
  double v = 0.0;
  double mu = 0.0;
  double rv = 0.0;  ///< combined position-velocity deviation
};

/// Sup over all fine grid points of the interpolated coarse trajectory
/// against the fine one. Requires matching horizons and the coarse step
/// count dividing the fine one; throws GridMismatch otherwise.
PathwiseError pathwise_error(const Trajectory& coarse, const Trajectory& fine,
                             Interp mode);

struct ConvergenceRow {
  int resolution = 0;
  double h = 0.0;
  double err_r = 0.0, err_v = 0.0, err_mu = 0.0, err_rv = 0.0;
  double se_r = 0.0, se_v = 0.0, se_mu = 0.0, se_rv = 0.0;
  int samples = 0;   ///< successful samples entering the estimate
  int failures = 0;
};

struct ConvergenceReport {
  std::vector<int> resolutions;
  int n_ref = 0;
  int requested_samples = 0;
  double p = 2.0;
  Interp interp = Interp::kConstant;
  std::uint64_t seed = 0;
  double horizon = 1.0;
  std::vector<ConvergenceRow> rows;  ///< one per resolution
};

struct StudyConfig {
  std::vector<int> resolutions;  ///< strictly increasing, divide n_ref
  int n_ref = 0;
  int samples = 2;
  double p = 2.0;
  std::uint64_t seed = 0;
  Interp interp = Interp::kConstant;
  double horizon = 1.0;
  int threads = 0;  ///< 0 = all hardware threads, 1 = serial reference
  double max_failure_rate = 0.1;
};

/// Monte Carlo self-convergence study: every sample couples all requested
/// resolutions and the reference resolution through one Brownian path.
/// Estimates (E[sup-error^p])^{1/p} per component with jackknife standard
/// errors. Samples are independent work items; the aggregation is a fixed-
/// order reduction over per-sample results, so the report is identical for
/// any thread count.
ConvergenceReport convergence_study(const SdaeProblem& problem,
                                    const StepperConfig& config,
                                    const StudyConfig& study);

struct ComparisonSampleRow {
  int sample = 0;
  int resolution = 0;
  double sup_diff = 0.0;           ///< sup over grid of stacked (r, v) gap
  double baseline_max_g = 0.0;     ///< max_k ||g(r_k)|| along the baseline
  double constrained_max_g = 0.0;  ///< same for the constrained scheme
  bool baseline_failed = false;
};

struct ComparisonAggregate {
  int resolution = 0;
  double mean_sup_diff = 0.0;
  double se_sup_diff = 0.0;
  double max_baseline_g = 0.0;
  double max_constrained_g = 0.0;
  int samples = 0;
  int baseline_failures = 0;
};

struct ComparisonReport {
  std::vector<int> resolutions;
  int samples = 0;
  std::uint64_t seed = 0;
  double horizon = 1.0;
  std::vector<ComparisonSampleRow> rows;
  std::vector<ComparisonAggregate> aggregates;
};

/// Same-path comparison of the constrained scheme against the truncated
/// explicit Euler baseline on the inherent SDE, across coupled resolutions.
/// Baseline failures (neighborhood exit) are recorded, not fatal.
ComparisonReport scheme_comparison(const SdaeProblem& problem,
                                   const StepperConfig& config,
                                   const std::vector<int>& resolutions,
                                   int samples, std::uint64_t seed,
                                   double horizon, int threads = 0);

// CSV emitters; numbers use shortest round-trip formatting.
std::string convergence_csv(const ConvergenceReport& report);
std::string comparison_csv(const ComparisonReport& report);
std::string trajectory_csv(const SdaeProblem& problem, const Trajectory& traj);

const char* interp_name(Interp mode);

}  // namespace sdae
