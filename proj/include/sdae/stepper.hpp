#pragma once

#include "sdae/model.hpp"

namespace sdae {

enum class KappaBoundMode { kEnforce, kWarn };

/// Solver controls for the constrained step.
struct StepperConfig {
  /// Residual tolerance on ||g(r_next)|| (absolute, on unit-scaled data).
  double newton_tol = 1e-12;
  int newton_max_iter = 25;
  /// Maximum dyadic refinements of the continuation parameter grid.
  int homotopy_max_depth = 10;
  /// Behavior when the converged position multiplier reaches its bound.
  KappaBoundMode kappa_bound_mode = KappaBoundMode::kEnforce;
  double gram_cond_limit = 1e12;
};

/// Per-step diagnostics.
struct StepRecord {
  double eta = 1.0;  ///< truncation factor in (0, 1]
  Vec kappa;         ///< position multiplier
  Vec lambda;        ///< velocity multiplier
  int newton_iters = 0;
  int homotopy_segments = 0;  ///< 0 when the direct Newton solve succeeded
  double constraint_residual = 0.0;  ///< ||g(r_next)||
  double tangency_residual = 0.0;    ///< ||Dg(r_next) v_next||
  bool kappa_within_bound = true;    ///< ||kappa|| < c_kappa
};

/// Truncation factor eta = min(1, c_eta / (max(||v||, ||v||^2, ||a||) h)).
/// Returns 1 when the max vanishes (the formula's continuous limit).
double truncation_eta(const SdaeProblem& problem, const Vec& r, const Vec& v,
                      double h);

struct PositionSolve {
  Vec r_next;
  Vec kappa;
  int newton_iters = 0;
  int homotopy_segments = 0;
  bool kappa_within_bound = true;
};

/// Solves g(r + eta v h + M^{-1} grad g(r) kappa) = 0 for kappa.
///
/// Newton from kappa = 0 first; the admissible root lies in a ball around
/// zero where the iteration matrix Dg(current) M^{-1} grad g(r) is a small
/// perturbation of the Gram matrix. On divergence, falls back to
/// continuation on F(tau, kappa) = g(r + eta v h + M^{-1} grad g(r) kappa)
/// + (tau - 1) g(r + eta v h), tracking the branch from (0, 0) over a
/// dyadically refined tau grid.
///
/// Throws NewtonDivergence, KappaBoundViolation (enforce mode only) or
/// SingularGram.
PositionSolve solve_position(const SdaeProblem& problem,
                             const StepperConfig& config, const Vec& r,
                             const Vec& v, double h);

struct VelocitySolve {
  Vec v_next;
  Vec lambda;
};

/// Solves the linear system Dg(r_next) M^{-1} grad g(r) lambda =
/// -Dg(r_next) [v + M^{-1}(eta a h + B dw)] and applies the update.
VelocitySolve solve_velocity(const SdaeProblem& problem,
                             const StepperConfig& config, const Vec& r,
                             const Vec& r_next, const Vec& v, double h,
                             const Vec& dw);

/// One constrained step: truncation, position solve, velocity solve.
/// Deterministic function of its inputs.
std::pair<State, StepRecord> step(const SdaeProblem& problem,
                                  const StepperConfig& config,
                                  const State& state, double h, const Vec& dw);

/// Explicit leading part of the velocity multiplier:
/// -G^{-1}(r) { Dg(r) M^{-1} [eta a h + B dw] + eta D2g(r)(v, v) h }.
/// The residual lambda - leading obeys the remainder scalings: O(h^2) in
/// the noise-free part, O(h) in the dw-linear coefficient.
Vec lambda_leading_term(const SdaeProblem& problem, const Vec& r, const Vec& v,
                        double h, const Vec& dw);

struct KappaProbe {
  Vec kappa;
  double residual = 0.0;
  int iters = 0;
  bool converged = false;
  bool within_bound = false;
};

/// Diagnostic: Newton on the position constraint from an arbitrary starting
/// multiplier. Used to probe alternative root branches; never throws on
/// bound violations.
KappaProbe probe_kappa_root(const SdaeProblem& problem,
                            const StepperConfig& config, const Vec& r,
                            const Vec& v, double h, const Vec& kappa0);

}  // namespace sdae
