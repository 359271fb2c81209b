#include "sdae/reference.hpp"

#include <cmath>

#include "sdae/errors.hpp"

namespace sdae {

namespace {

// Velocity-block drift M^{-1}[P a - grad g G^{-1} D2g(v,v)]; shared by the
// stacked drift and the comparison scheme's truncation factor.
Vec velocity_block_drift(const SdaeProblem& problem, const State& s,
                         double cond_limit) {
  const ConstraintGeometry& geo = problem.geometry;
  const Mat jac = geo.dg(s.r);
  const GramSystem gram(gram_matrix(geo, s.r), cond_limit, "inherent drift");

  const Vec a = problem.drift_a(s.r, s.v);
  const Vec projected =
      a - jac.transpose() * gram.solve(Vec(jac * geo.mass.apply_inverse(a)));
  const Vec curvature = jac.transpose() * gram.solve(geo.d2g(s.r, s.v, s.v));
  return geo.mass.apply_inverse(Vec(projected - curvature));
}

}  // namespace

Vec inherent_drift(const SdaeProblem& problem, const State& state,
                   double cond_limit) {
  const int n = problem.geometry.n;
  Vec out(2 * n);
  out.head(n) = state.v;
  out.tail(n) = velocity_block_drift(problem, state, cond_limit);
  return out;
}

Mat inherent_diffusion(const SdaeProblem& problem, const State& state,
                       double cond_limit) {
  const ConstraintGeometry& geo = problem.geometry;
  const int n = geo.n;
  const Mat b = problem.diffusion_b(state.r, state.v);
  const Mat jac = geo.dg(state.r);
  const GramSystem gram(gram_matrix(geo, state.r), cond_limit,
                        "inherent diffusion");

  const Mat projected =
      b - jac.transpose() * gram.solve(Mat(jac * geo.mass.apply_inverse(b)));
  Mat out = Mat::Zero(2 * n, problem.ell);
  out.bottomRows(n) = geo.mass.apply_inverse(projected);
  return out;
}

InherentCoefficients make_inherent(const SdaeProblem& problem,
                                   double cond_limit) {
  const int n = problem.geometry.n;
  InherentCoefficients coeffs;
  coeffs.drift = [&problem, n, cond_limit](const Vec& x) {
    return inherent_drift(problem, State{x.head(n), x.tail(n)}, cond_limit);
  };
  coeffs.diffusion = [&problem, n, cond_limit](const Vec& x) {
    return inherent_diffusion(problem, State{x.head(n), x.tail(n)},
                              cond_limit);
  };
  return coeffs;
}

EmTrajectory integrate_em(const SdaeProblem& problem, int n,
                          const BrownianPath& path, bool truncated,
                          double cond_limit) {
  const int dim = problem.geometry.n;
  const double h = path.horizon() / n;
  const auto increments = path.increments_at(n);

  EmTrajectory traj;
  traj.horizon = path.horizon();
  traj.steps = n;
  traj.states.reserve(n + 1);
  traj.states.push_back(problem.initial);

  for (int k = 0; k < n; ++k) {
    const State& s = traj.states.back();
    try {
      const Vec vdrift = velocity_block_drift(problem, s, cond_limit);
      double eta = 1.0;
      if (truncated) {
        const double norm =
            std::sqrt(s.v.squaredNorm() + vdrift.squaredNorm());
        if (norm * h > 1.0) eta = 1.0 / (norm * h);
      }
      const Mat diff = inherent_diffusion(problem, s, cond_limit);

      State next;
      next.r = s.r + eta * h * s.v;
      next.v = s.v + eta * h * vdrift +
               diff.bottomRows(dim) * increments[k];
      if (!next.r.allFinite() || !next.v.allFinite())
        throw NonFiniteState("comparison trajectory left finite range");
      traj.states.push_back(std::move(next));
    } catch (const Error& e) {
      throw StepFailure(k, e.what());
    }
  }
  return traj;
}

std::vector<Vec> mu_quadrature(const SdaeProblem& problem,
                               const std::vector<State>& states,
                               const std::vector<Vec>& increments, double h,
                               double cond_limit) {
  if (states.size() != increments.size() + 1)
    throw GridMismatch("mu_quadrature: states/increments size mismatch");

  const ConstraintGeometry& geo = problem.geometry;
  std::vector<Vec> mu;
  mu.reserve(states.size());
  mu.push_back(Vec::Zero(geo.m));

  for (std::size_t k = 0; k < increments.size(); ++k) {
    const State& s = states[k];
    const Mat jac = geo.dg(s.r);
    const GramSystem gram(gram_matrix(geo, s.r), cond_limit,
                          "mu quadrature");
    const Vec impulse = h * problem.drift_a(s.r, s.v) +
                        problem.diffusion_b(s.r, s.v) * increments[k];
    const Vec integrand = jac * geo.mass.apply_inverse(impulse) +
                          h * geo.d2g(s.r, s.v, s.v);
    mu.push_back(mu.back() - gram.solve(integrand));
  }
  return mu;
}

double starred_inner(const MassMatrix& mass, const State& x, const State& y) {
  return x.r.dot(y.r) + mass.apply_sqrt(x.v).dot(mass.apply_sqrt(y.v));
}

double starred_norm(const MassMatrix& mass, const State& x) {
  return std::sqrt(starred_inner(mass, x, x));
}

double starred_growth_bound(const SdaeProblem& problem) {
  if (!problem.growth_meta)
    throw MissingGrowthMeta("starred_growth_bound: no growth constants");
  // On the tangent bundle the projector and constraint-force terms drop out
  // of <x, drift(x)>_*, leaving <r, v> + <v, a(r, v)> which the one-sided
  // growth constant bounds in the Euclidean norm; the mass spectrum converts
  // between the norms.
  const double min_eig = problem.geometry.mass.min_eigenvalue();
  return problem.growth_meta->c_a * std::max(1.0, 1.0 / std::min(1.0, min_eig));
}

}  // namespace sdae
