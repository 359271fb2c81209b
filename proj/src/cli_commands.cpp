#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "sdae/cli.hpp"
#include "sdae/errors.hpp"
#include "sdae/numfmt.hpp"

namespace sdae::cli {

namespace {

using nlohmann::json;

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

json echo_of(const RunConfig& config) { return json::parse(config.echo_json); }

int solver_exit(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kExitSolver;
}

// Sample states for validation: positions on the manifold plus moderate
// ambient perturbations, velocities tangent at the manifold points.
struct ValidationSamples {
  std::vector<State> manifold_states;
  std::vector<Vec> positions;          // manifold + perturbed
  std::vector<Vec> manifold_positions;
  std::vector<State> growth_states;    // inside a moderate ball
};

ValidationSamples make_samples(const RunConfig& config) {
  const ModelConfig& model = config.model;
  ValidationSamples out;
  const int count = config.validate_samples;
  for (int i = 0; i < count; ++i) {
    State s;
    if (model.name == "fiber")
      s = random_chain_state(model.num_points, model.ds, config.seed, i);
    else
      s = random_sphere_state(model.name == "pendulum" ? 2 : 3, config.seed,
                              i);
    out.manifold_positions.push_back(s.r);
    out.positions.push_back(s.r);
    Vec perturbed = s.r;
    for (int k = 0; k < perturbed.size(); ++k)
      perturbed(k) += 0.05 * standard_normal(config.seed, 21,
                                             static_cast<std::uint64_t>(i) *
                                                     perturbed.size() +
                                                 k);
    out.positions.push_back(perturbed);

    State growth;
    const double rscale =
        0.5 + 1.5 * uniform01(config.seed, 22, static_cast<std::uint64_t>(i));
    growth.r = rscale * s.r;
    growth.v = 3.0 * s.v / std::max(1.0, s.v.norm());
    out.growth_states.push_back(growth);
    out.manifold_states.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int cmd_simulate(const RunConfig& config) {
  if (config.simulate_n < 1)
    throw ConfigError("simulate requires a 'simulate' config block with N");
  const SdaeProblem problem = build_model(config.model);
  try {
    const BrownianPath path = sample_path(problem.ell, config.horizon,
                                          config.simulate_n, config.seed, 0);
    const Trajectory traj =
        integrate(problem, config.stepper, config.simulate_n, path);
    write_file(config.out_dir, "trajectory.csv",
               trajectory_csv(problem, traj));

    double max_g = 0.0, max_tan = 0.0;
    for (const auto& rec : traj.records) {
      max_g = std::max(max_g, rec.constraint_residual);
      max_tan = std::max(max_tan, rec.tangency_residual);
    }
    std::cout << "simulate: " << config.simulate_n << " steps, max ||g|| = "
              << max_g << ", max ||Dg v|| = " << max_tan << "\n"
              << "wrote " << config.out_dir << "/trajectory.csv\n";
    return kExitOk;
  } catch (const Error& e) {
    return solver_exit(e);
  }
}

int cmd_converge(const RunConfig& config) {
  if (config.resolutions.empty())
    throw ConfigError("converge requires a 'converge' config block");
  const SdaeProblem problem = build_model(config.model);

  StudyConfig study;
  study.resolutions = config.resolutions;
  study.n_ref = config.n_ref;
  study.samples = config.samples;
  study.p = config.p;
  study.seed = config.seed;
  study.interp = config.interp;
  study.horizon = config.horizon;
  study.threads = config.threads;

  try {
    const ConvergenceReport report =
        convergence_study(problem, config.stepper, study);
    write_file(config.out_dir, "convergence.csv", convergence_csv(report));

    json summary;
    summary["config"] = echo_of(config);
    summary["seed"] = report.seed;
    summary["interpolation"] = interp_name(report.interp);
    json rows = json::array();
    for (const auto& row : report.rows) {
      rows.push_back({{"N", row.resolution},
                      {"h", row.h},
                      {"err_r", row.err_r},
                      {"err_v", row.err_v},
                      {"err_mu", row.err_mu},
                      {"err_rv", row.err_rv},
                      {"se_r", row.se_r},
                      {"se_v", row.se_v},
                      {"se_mu", row.se_mu},
                      {"se_rv", row.se_rv},
                      {"samples", row.samples},
                      {"failures", row.failures}});
    }
    summary["results"] = rows;
    write_file(config.out_dir, "summary.json", summary.dump(2) + "\n");

    for (const auto& row : report.rows)
      std::cout << "N = " << row.resolution << "  err_rv = " << row.err_rv
                << " (se " << row.se_rv << ")  err_mu = " << row.err_mu
                << " (se " << row.se_mu << ")  failures = " << row.failures
                << "\n";
    std::cout << "wrote " << config.out_dir << "/convergence.csv and "
              << config.out_dir << "/summary.json\n";
    return kExitOk;
  } catch (const Error& e) {
    return solver_exit(e);
  }
}

int cmd_compare(const RunConfig& config) {
  if (config.compare_resolutions.empty())
    throw ConfigError("compare requires a 'compare' config block");
  const SdaeProblem problem = build_model(config.model);

  try {
    const ComparisonReport report = scheme_comparison(
        problem, config.stepper, config.compare_resolutions,
        config.compare_samples, config.seed, config.horizon, config.threads);
    write_file(config.out_dir, "comparison.csv", comparison_csv(report));

    json summary;
    summary["config"] = echo_of(config);
    summary["seed"] = report.seed;
    json aggs = json::array();
    for (const auto& agg : report.aggregates) {
      aggs.push_back({{"N", agg.resolution},
                      {"mean_sup_diff", agg.mean_sup_diff},
                      {"se_sup_diff", agg.se_sup_diff},
                      {"max_baseline_g", agg.max_baseline_g},
                      {"max_constrained_g", agg.max_constrained_g},
                      {"samples", agg.samples},
                      {"baseline_failures", agg.baseline_failures}});
    }
    summary["aggregates"] = aggs;
    write_file(config.out_dir, "comparison_summary.json",
               summary.dump(2) + "\n");

    for (const auto& agg : report.aggregates)
      std::cout << "N = " << agg.resolution << "  mean sup-diff = "
                << agg.mean_sup_diff << "  baseline max ||g|| = "
                << agg.max_baseline_g << "  constrained max ||g|| = "
                << agg.max_constrained_g << "\n";
    std::cout << "wrote " << config.out_dir << "/comparison.csv and "
              << config.out_dir << "/comparison_summary.json\n";
    return kExitOk;
  } catch (const Error& e) {
    return solver_exit(e);
  }
}

int cmd_validate(const RunConfig& config) {
  const SdaeProblem problem = build_model(config.model);
  const ValidationSamples samples = make_samples(config);
  bool failed = false;

  auto report = [&](const std::string& name, bool ok,
                    const std::string& detail) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    if (!ok) failed = true;
  };

  const auto derivatives = check_derivatives(problem.geometry,
                                             samples.positions,
                                             config.validate_fd_step);
  report("derivatives",
         derivatives.all_ok(),
         "max dg err " + format_double(derivatives.max_dg_error()) +
             ", max d2g err " + format_double(derivatives.max_d2g_error()) +
             ", tol " + format_double(derivatives.tolerance));

  const auto [g0, t0] = manifold_residuals(problem.geometry, problem.initial);
  report("initial data on the tangent bundle", g0 <= 1e-10 && t0 <= 1e-10,
         "||g(r0)|| = " + format_double(g0) + ", ||Dg(r0) v0|| = " +
             format_double(t0));

  if (problem.growth_meta) {
    const auto violations = check_growth(problem, samples.growth_states);
    std::string detail = std::to_string(violations.size()) + " violations";
    if (!violations.empty())
      detail += "; first: " + violations.front().condition + " lhs " +
                format_double(violations.front().lhs) + " > rhs " +
                format_double(violations.front().rhs);
    report("coefficient growth bounds", violations.empty(), detail);
  } else {
    report("coefficient growth bounds", true, "skipped, no growth constants");
  }

  std::vector<Vec> ambient;
  for (const Vec& x : samples.positions) ambient.push_back(1.5 * x);
  try {
    const double estimate = estimate_cg(problem.geometry,
                                        samples.manifold_positions, ambient);
    const std::string detail = "sampled estimate " + format_double(estimate) +
                               " vs configured " +
                               format_double(problem.geometry.c_g);
    if (estimate <= problem.geometry.c_g) {
      report("constraint constant c_g", true, detail);
    } else if (config.cg_failure_fatal) {
      report("constraint constant c_g", false, detail);
    } else {
      std::cout << "WARN  configured c_g below sampled estimate  (" << detail
                << ")\n";
    }
  } catch (const SingularGram& e) {
    report("constraint constant c_g", false, e.what());
  }

  return failed ? kExitValidation : kExitOk;
}

}  // namespace sdae::cli
