#include "sdae/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#ifdef SDAE_HAVE_OPENMP
#include <omp.h>
#endif

#include "sdae/errors.hpp"
#include "sdae/numfmt.hpp"
#include "sdae/reference.hpp"

namespace sdae {

Trajectory integrate(const SdaeProblem& problem, const StepperConfig& config,
                     int n, const BrownianPath& path) {
  if (n < 1) throw Error("integrate: need at least one step");
  const auto increments = path.increments_at(n);
  const double h = path.horizon() / n;

  Trajectory traj;
  traj.horizon = path.horizon();
  traj.steps = n;
  traj.states.reserve(n + 1);
  traj.mu.reserve(n + 1);
  traj.records.reserve(n);

  traj.states.push_back(problem.initial);
  traj.mu.push_back(Vec::Zero(problem.geometry.m));

  for (int k = 0; k < n; ++k) {
    try {
      auto [next, record] = step(problem, config, traj.states.back(), h,
                                 increments[k]);
      traj.mu.push_back(traj.mu.back() + record.lambda);
      traj.states.push_back(std::move(next));
      traj.records.push_back(std::move(record));
    } catch (const Error& e) {
      throw StepFailure(k, e.what());
    }
  }
  return traj;
}

namespace {

// Canonical interpolation of a vector sequence at fine index j; weights are
// exact rationals of the two step counts.
Vec interpolate(const std::vector<Vec>& values, int n_coarse, int n_fine,
                int j, Interp mode) {
  const long pos = static_cast<long>(j) * n_coarse;
  const long k = pos / n_fine;
  const long rem = pos % n_fine;
  if (mode == Interp::kConstant || rem == 0) return values[k];
  const double w = static_cast<double>(rem) / static_cast<double>(n_fine);
  return values[k] + w * (values[k + 1] - values[k]);
}

}  // namespace

PathwiseError pathwise_error(const Trajectory& coarse, const Trajectory& fine,
                             Interp mode) {
  if (coarse.horizon != fine.horizon)
    throw GridMismatch("pathwise_error: horizons differ");
  if (coarse.steps < 1 || fine.steps % coarse.steps != 0)
    throw GridMismatch("pathwise_error: coarse grid does not refine into fine");

  std::vector<Vec> rc(coarse.steps + 1), vc(coarse.steps + 1);
  for (int k = 0; k <= coarse.steps; ++k) {
    rc[k] = coarse.states[k].r;
    vc[k] = coarse.states[k].v;
  }

  PathwiseError err;
  for (int j = 0; j <= fine.steps; ++j) {
    const Vec dr =
        interpolate(rc, coarse.steps, fine.steps, j, mode) - fine.states[j].r;
    const Vec dv =
        interpolate(vc, coarse.steps, fine.steps, j, mode) - fine.states[j].v;
    const Vec dmu =
        interpolate(coarse.mu, coarse.steps, fine.steps, j, mode) - fine.mu[j];
    err.r = std::max(err.r, dr.norm());
    err.v = std::max(err.v, dv.norm());
    err.mu = std::max(err.mu, dmu.norm());
    err.rv = std::max(err.rv,
                      std::sqrt(dr.squaredNorm() + dv.squaredNorm()));
  }
  return err;
}

namespace {

// Runs fn(0) .. fn(count - 1); threads == 1 is the serial reference path,
// anything else goes through the OpenMP pool. Workers must not throw.
void run_indexed(int count, int threads, const std::function<void(int)>& fn) {
#ifdef SDAE_HAVE_OPENMP
  const int want = threads <= 0 ? omp_get_max_threads() : threads;
  if (want > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(want)
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
#else
  (void)threads;
#endif
  for (int i = 0; i < count; ++i) fn(i);
}

struct JackknifeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// (mean of e_i^p)^{1/p} with leave-one-out standard error.
JackknifeEstimate jackknife_lp(const std::vector<double>& errors, double p) {
  JackknifeEstimate out;
  const int s = static_cast<int>(errors.size());
  if (s == 0) return out;

  double total = 0.0;
  for (double e : errors) total += std::pow(e, p);
  out.value = std::pow(total / s, 1.0 / p);
  if (s < 2) return out;

  std::vector<double> loo(s);
  double loo_mean = 0.0;
  for (int i = 0; i < s; ++i) {
    loo[i] = std::pow((total - std::pow(errors[i], p)) / (s - 1), 1.0 / p);
    loo_mean += loo[i];
  }
  loo_mean /= s;
  double ss = 0.0;
  for (double t : loo) ss += (t - loo_mean) * (t - loo_mean);
  out.stderr_ = std::sqrt(ss * (s - 1) / s);
  return out;
}

}  // namespace

ConvergenceReport convergence_study(const SdaeProblem& problem,
                                    const StepperConfig& config,
                                    const StudyConfig& study) {
  if (study.samples < 2)
    throw Error("convergence_study: need at least 2 samples");
  if (study.resolutions.empty())
    throw Error("convergence_study: no resolutions given");
  if (!(study.p >= 1.0)) throw Error("convergence_study: p must be >= 1");
  for (std::size_t i = 0; i < study.resolutions.size(); ++i) {
    const int n = study.resolutions[i];
    if (n < 1 || study.n_ref % n != 0)
      throw Error("convergence_study: resolution " + std::to_string(n) +
                  " does not divide n_ref");
    if (i > 0 && study.resolutions[i] <= study.resolutions[i - 1])
      throw Error("convergence_study: resolutions must be strictly increasing");
  }

  const int n_res = static_cast<int>(study.resolutions.size());
  const int n_samples = study.samples;

  // One slot per (sample, resolution); absent = failed. Filled by
  // independent workers, reduced in sample order afterwards.
  std::vector<std::vector<std::optional<PathwiseError>>> results(
      n_samples, std::vector<std::optional<PathwiseError>>(n_res));
  std::vector<std::optional<std::string>> fatal(n_samples);

  run_indexed(n_samples, study.threads, [&](int s) {
    try {
      const BrownianPath path = sample_path(problem.ell, study.horizon,
                                            study.n_ref, study.seed,
                                            static_cast<std::uint64_t>(s));
      Trajectory reference;
      try {
        reference = integrate(problem, config, study.n_ref, path);
      } catch (const Error&) {
        return;  // all resolutions of this sample count as failures
      }
      for (int i = 0; i < n_res; ++i) {
        const int n = study.resolutions[i];
        try {
          if (n == study.n_ref) {
            results[s][i] = PathwiseError{};  // self-comparison
            continue;
          }
          const Trajectory coarse = integrate(problem, config, n, path);
          results[s][i] = pathwise_error(coarse, reference, study.interp);
        } catch (const Error&) {
          // counted below
        }
      }
    } catch (const std::exception& e) {
      fatal[s] = std::string(e.what());
    }
  });

  for (const auto& f : fatal)
    if (f) throw Error("convergence_study: " + *f);

  ConvergenceReport report;
  report.resolutions = study.resolutions;
  report.n_ref = study.n_ref;
  report.requested_samples = n_samples;
  report.p = study.p;
  report.interp = study.interp;
  report.seed = study.seed;
  report.horizon = study.horizon;

  for (int i = 0; i < n_res; ++i) {
    std::vector<double> er, ev, emu, erv;
    int failures = 0;
    for (int s = 0; s < n_samples; ++s) {
      if (!results[s][i]) {
        ++failures;
        continue;
      }
      er.push_back(results[s][i]->r);
      ev.push_back(results[s][i]->v);
      emu.push_back(results[s][i]->mu);
      erv.push_back(results[s][i]->rv);
    }
    if (failures > study.max_failure_rate * n_samples)
      throw Error("convergence_study: failure rate " +
                  std::to_string(failures) + "/" +
                  std::to_string(n_samples) + " at resolution " +
                  std::to_string(study.resolutions[i]));

    ConvergenceRow row;
    row.resolution = study.resolutions[i];
    row.h = study.horizon / row.resolution;
    row.samples = static_cast<int>(er.size());
    row.failures = failures;
    const auto jr = jackknife_lp(er, study.p);
    const auto jv = jackknife_lp(ev, study.p);
    const auto jm = jackknife_lp(emu, study.p);
    const auto jc = jackknife_lp(erv, study.p);
    row.err_r = jr.value;
    row.se_r = jr.stderr_;
    row.err_v = jv.value;
    row.se_v = jv.stderr_;
    row.err_mu = jm.value;
    row.se_mu = jm.stderr_;
    row.err_rv = jc.value;
    row.se_rv = jc.stderr_;
    report.rows.push_back(row);
  }
  return report;
}

ComparisonReport scheme_comparison(const SdaeProblem& problem,
                                   const StepperConfig& config,
                                   const std::vector<int>& resolutions,
                                   int samples, std::uint64_t seed,
                                   double horizon, int threads) {
  if (resolutions.empty()) throw Error("scheme_comparison: no resolutions");
  if (samples < 2) throw Error("scheme_comparison: need at least 2 samples");
  const int n_max = *std::max_element(resolutions.begin(), resolutions.end());
  const int n_res = static_cast<int>(resolutions.size());

  std::vector<std::vector<ComparisonSampleRow>> rows(
      samples, std::vector<ComparisonSampleRow>(n_res));
  std::vector<std::optional<std::string>> fatal(samples);

  run_indexed(samples, threads, [&](int s) {
    try {
      const BrownianPath path = sample_path(problem.ell, horizon, n_max, seed,
                                            static_cast<std::uint64_t>(s));
      for (int i = 0; i < n_res; ++i) {
        const int n = resolutions[i];
        ComparisonSampleRow row;
        row.sample = s;
        row.resolution = n;

        const Trajectory constrained = integrate(problem, config, n, path);
        for (const auto& rec : constrained.records)
          row.constrained_max_g =
              std::max(row.constrained_max_g, rec.constraint_residual);

        try {
          const EmTrajectory baseline =
              integrate_em(problem, n, path, /*truncated=*/true,
                           config.gram_cond_limit);
          for (int k = 0; k <= n; ++k) {
            const Vec dr = baseline.states[k].r - constrained.states[k].r;
            const Vec dv = baseline.states[k].v - constrained.states[k].v;
            row.sup_diff = std::max(
                row.sup_diff, std::sqrt(dr.squaredNorm() + dv.squaredNorm()));
            row.baseline_max_g =
                std::max(row.baseline_max_g,
                         problem.geometry.g(baseline.states[k].r).norm());
          }
        } catch (const Error&) {
          row.baseline_failed = true;
        }
        rows[s][i] = std::move(row);
      }
    } catch (const std::exception& e) {
      fatal[s] = std::string(e.what());
    }
  });

  for (const auto& f : fatal)
    if (f) throw Error("scheme_comparison: " + *f);

  ComparisonReport report;
  report.resolutions = resolutions;
  report.samples = samples;
  report.seed = seed;
  report.horizon = horizon;

  for (int i = 0; i < n_res; ++i) {
    ComparisonAggregate agg;
    agg.resolution = resolutions[i];
    std::vector<double> diffs;
    for (int s = 0; s < samples; ++s) {
      const auto& row = rows[s][i];
      report.rows.push_back(row);
      agg.max_constrained_g =
          std::max(agg.max_constrained_g, row.constrained_max_g);
      if (row.baseline_failed) {
        ++agg.baseline_failures;
        continue;
      }
      diffs.push_back(row.sup_diff);
      agg.max_baseline_g = std::max(agg.max_baseline_g, row.baseline_max_g);
    }
    agg.samples = static_cast<int>(diffs.size());
    if (!diffs.empty()) {
      double mean = 0.0;
      for (double d : diffs) mean += d;
      mean /= diffs.size();
      double ss = 0.0;
      for (double d : diffs) ss += (d - mean) * (d - mean);
      agg.mean_sup_diff = mean;
      if (diffs.size() > 1)
        agg.se_sup_diff =
            std::sqrt(ss / (diffs.size() * (diffs.size() - 1.0)));
    }
    report.aggregates.push_back(agg);
  }

  // Sort rows by (resolution, sample) for a stable file layout.
  std::sort(report.rows.begin(), report.rows.end(),
            [](const ComparisonSampleRow& a, const ComparisonSampleRow& b) {
              return a.resolution != b.resolution
                         ? a.resolution < b.resolution
                         : a.sample < b.sample;
            });
  return report;
}

const char* interp_name(Interp mode) {
  return mode == Interp::kConstant ? "constant" : "linear";
}

std::string convergence_csv(const ConvergenceReport& report) {
  std::string out = "N,h,component,p,error,stderr,samples,failures\n";
  for (const auto& row : report.rows) {
    const struct {
      const char* name;
      double err, se;
    } comps[] = {{"r", row.err_r, row.se_r},
                 {"v", row.err_v, row.se_v},
                 {"mu", row.err_mu, row.se_mu},
                 {"rv", row.err_rv, row.se_rv}};
    for (const auto& c : comps) {
      out += std::to_string(row.resolution) + ',' + format_double(row.h) +
             ',' + c.name + ',' + format_double(report.p) + ',' +
             format_double(c.err) + ',' + format_double(c.se) + ',' +
             std::to_string(row.samples) + ',' +
             std::to_string(row.failures) + '\n';
    }
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out =
      "sample,N,h,sup_diff,baseline_max_g,constrained_max_g,baseline_failed\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.sample) + ',' +
           std::to_string(row.resolution) + ',' +
           format_double(report.horizon / row.resolution) + ',' +
           format_double(row.sup_diff) + ',' +
           format_double(row.baseline_max_g) + ',' +
           format_double(row.constrained_max_g) + ',' +
           (row.baseline_failed ? "1" : "0") + '\n';
  }
  return out;
}

std::string trajectory_csv(const SdaeProblem& problem,
                           const Trajectory& traj) {
  const int n = problem.geometry.n;
  const int m = problem.geometry.m;

  std::string out = "t";
  for (int i = 0; i < n; ++i) out += ",r" + std::to_string(i);
  for (int i = 0; i < n; ++i) out += ",v" + std::to_string(i);
  for (int i = 0; i < m; ++i) out += ",mu" + std::to_string(i);
  out += ",eta,kappa_norm,lambda_norm,constraint_residual,tangency_residual\n";

  for (int k = 0; k <= traj.steps; ++k) {
    const State& s = traj.states[k];
    out += format_double(traj.time_at(k));
    for (int i = 0; i < n; ++i) out += ',' + format_double(s.r(i));
    for (int i = 0; i < n; ++i) out += ',' + format_double(s.v(i));
    for (int i = 0; i < m; ++i) out += ',' + format_double(traj.mu[k](i));
    if (k == 0) {
      const auto [gres, tres] = manifold_residuals(problem.geometry, s);
      out += ",1,0,0," + format_double(gres) + ',' + format_double(tres);
    } else {
      const StepRecord& rec = traj.records[k - 1];
      out += ',' + format_double(rec.eta) + ',' +
             format_double(rec.kappa.norm()) + ',' +
             format_double(rec.lambda.norm()) + ',' +
             format_double(rec.constraint_residual) + ',' +
             format_double(rec.tangency_residual);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sdae
