#pragma once

#include "sdae/model.hpp"
#include "sdae/stochastics.hpp"

namespace sdae {

/// Coefficients of the inherent (multiplier-free) SDE on the stacked state
/// (r, v) in R^{2n}. Only valid on and near the tangent bundle; there is no
/// global extension, integrators fail when the Gram matrix degenerates.
struct InherentCoefficients {
  std::function<Vec(const Vec&)> drift;      ///< R^{2n} -> R^{2n}
  std::function<Mat(const Vec&)> diffusion;  ///< R^{2n} -> 2n x ell
};

/// Stacked drift (v, M^{-1}[P(r) a(r,v) - grad g(r) G^{-1}(r) D2g(r)(v,v)]).
/// On the tangent bundle, Dg(r) (second block) + D2g(r)(v, v) = 0, which is
/// what propagates the differentiated constraint.
Vec inherent_drift(const SdaeProblem& problem, const State& state,
                   double cond_limit = 1e12);

/// Stacked diffusion: zero top block, M^{-1} P(r) B(r, v) bottom block.
Mat inherent_diffusion(const SdaeProblem& problem, const State& state,
                       double cond_limit = 1e12);

InherentCoefficients make_inherent(const SdaeProblem& problem,
                                   double cond_limit = 1e12);

/// Unconstrained comparison trajectory (no multiplier solves, no constraint
/// enforcement; g(r_k) drifts).
struct EmTrajectory {
  double horizon = 0.0;
  int steps = 0;
  std::vector<State> states;  ///< steps + 1 entries
};

/// Euler-Maruyama on the inherent SDE, driven by increments_at(path, n).
/// With truncated = true the drift is damped by
/// eta~ = min(1, [(||v||^2 + ||second-block drift||^2)^{1/2} h]^{-1}),
/// the standard drift-truncated explicit scheme.
/// Throws SingularGram / NonFiniteState with the step index on failure.
EmTrajectory integrate_em(const SdaeProblem& problem, int n,
                          const BrownianPath& path, bool truncated,
                          double cond_limit = 1e12);

/// Left-endpoint quadrature of the continuous multiplier representation
/// mu(t) = -int G^{-1}(r) { Dg(r) M^{-1} [a ds + B dw] + D2g(r)(v,v) ds }
/// along a discrete trajectory with matching increments. Returns mu at
/// every grid point, mu(0) = 0.
std::vector<Vec> mu_quadrature(const SdaeProblem& problem,
                               const std::vector<State>& states,
                               const std::vector<Vec>& increments, double h,
                               double cond_limit = 1e12);

// Weighted phase-space inner product: position block Euclidean, velocity
// block through M^{1/2}.
double starred_inner(const MassMatrix& mass, const State& x, const State& y);
double starred_norm(const MassMatrix& mass, const State& x);

/// Constant C such that <x, drift(x)>_* <= C (1 + ||x||_*^2) on the tangent
/// bundle, derived from the problem's growth constants and the mass
/// spectrum. Throws MissingGrowthMeta.
double starred_growth_bound(const SdaeProblem& problem);

}  // namespace sdae
