// Times the Monte Carlo convergence study with the serial reference driver
// against the OpenMP driver and checks that both produce the same report.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "sdae/experiments.hpp"

using namespace sdae;

namespace {

double run_study(const SdaeProblem& problem, const StepperConfig& config,
                 StudyConfig study, int threads, std::string* csv) {
  study.threads = threads;
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceReport report = convergence_study(problem, config, study);
  const auto t1 = std::chrono::steady_clock::now();
  *csv = convergence_csv(report);
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int samples = argc > 1 ? std::atoi(argv[1]) : 120;

  const SdaeProblem problem = make_pendulum(1.0);
  const StepperConfig config;

  StudyConfig study;
  study.resolutions = {32, 64, 128, 256, 512};
  study.n_ref = 1 << 12;
  study.samples = samples;
  study.seed = 2024;

  std::string serial_csv, parallel_csv;
  const double serial =
      run_study(problem, config, study, /*threads=*/1, &serial_csv);
  const double parallel =
      run_study(problem, config, study, /*threads=*/0, &parallel_csv);

  std::cout << "pendulum study, " << samples << " samples, N_ref = "
            << study.n_ref << "\n"
            << "serial reference: " << serial << " s\n"
            << "openmp:           " << parallel << " s\n"
            << "speedup:          " << serial / parallel << "x\n"
            << "reports identical: "
            << (serial_csv == parallel_csv ? "yes" : "NO") << "\n";
  return serial_csv == parallel_csv ? 0 : 1;
}
