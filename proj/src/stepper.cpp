#include "sdae/stepper.hpp"

#include <cmath>
#include <limits>

#include "sdae/errors.hpp"

namespace sdae {

double truncation_eta(const SdaeProblem& problem, const Vec& r, const Vec& v,
                      double h) {
  if (!(h > 0.0)) throw Error("truncation_eta: h must be positive");
  const double c_eta = derived_constants(problem.geometry).c_eta;
  const double vnorm = v.norm();
  const double anorm = problem.drift_a(r, v).norm();
  const double scale = std::max({vnorm, vnorm * vnorm, anorm}) * h;
  if (scale <= c_eta) return 1.0;
  return c_eta / scale;
}

namespace {

// Shared Newton kernel for the position constraint. Iterates
//   kappa <- kappa - J(kappa)^{-1} [ g(base + W kappa) + shift ]
// with W = M^{-1} grad g(r) and J(kappa) = Dg(base + W kappa) W.
// The shift realizes the continuation right-hand side ((tau - 1) g(base));
// shift = 0 recovers the plain constraint solve.
struct NewtonResult {
  Vec kappa;
  double residual = std::numeric_limits<double>::infinity();
  int iters = 0;
  bool converged = false;
};

NewtonResult newton_kappa(const ConstraintGeometry& geo, const Vec& base,
                          const Mat& minv_grad, const Vec& shift,
                          Vec kappa, const StepperConfig& config,
                          double divergence_radius) {
  NewtonResult out;
  out.kappa = std::move(kappa);
  double prev_residual = std::numeric_limits<double>::infinity();
  int worse_in_a_row = 0;

  for (int it = 0; it < config.newton_max_iter; ++it) {
    const Vec r_cand = base + minv_grad * out.kappa;
    const Vec res = geo.g(r_cand) + shift;
    out.residual = res.norm();
    if (!(out.residual == out.residual)) return out;  // NaN: bail out
    if (out.residual <= config.newton_tol) {
      out.converged = true;
      return out;
    }
    if (out.residual > prev_residual) {
      if (++worse_in_a_row >= 2) return out;
    } else {
      worse_in_a_row = 0;
    }
    prev_residual = out.residual;

    const Mat jac = geo.dg(r_cand) * minv_grad;
    const GramSystem system(jac, config.gram_cond_limit, "position solve");
    out.kappa -= system.solve(res);
    ++out.iters;

    if (divergence_radius > 0.0 && out.kappa.norm() > divergence_radius)
      return out;
  }
  // Converged late?
  const Vec res = geo.g(base + minv_grad * out.kappa) + shift;
  out.residual = res.norm();
  out.converged = out.residual <= config.newton_tol;
  return out;
}

}  // namespace

PositionSolve solve_position(const SdaeProblem& problem,
                             const StepperConfig& config, const Vec& r,
                             const Vec& v, double h) {
  const ConstraintGeometry& geo = problem.geometry;
  const double eta = truncation_eta(problem, r, v, h);
  const double c_kappa = derived_constants(geo).c_kappa;

  const Vec base = r + eta * h * v;
  const Mat minv_grad = geo.mass.apply_inverse(Mat(geo.dg(r).transpose()));

  // Direct Newton from zero. In enforce mode, leaving the uniqueness ball
  // counts as divergence and routes to continuation; warn mode lets the
  // iteration run so exploratory configs can reach far roots.
  const double radius =
      config.kappa_bound_mode == KappaBoundMode::kEnforce ? 2.0 * c_kappa
                                                          : 0.0;
  NewtonResult direct = newton_kappa(geo, base, minv_grad, Vec::Zero(geo.m),
                                     Vec::Zero(geo.m), config, radius);

  PositionSolve out;
  out.newton_iters = direct.iters;

  if (!direct.converged) {
    // Continuation on the dyadically refined tau grid, branch from (0, 0).
    const Vec g_base = geo.g(base);
    bool done = false;
    for (int depth = 1; depth <= config.homotopy_max_depth && !done; ++depth) {
      const int segments = 1 << depth;
      Vec kappa = Vec::Zero(geo.m);
      bool failed = false;
      int iters = 0;
      for (int i = 1; i <= segments; ++i) {
        const double tau = static_cast<double>(i) / segments;
        NewtonResult seg = newton_kappa(geo, base, minv_grad,
                                        Vec((tau - 1.0) * g_base), kappa,
                                        config, radius);
        iters += seg.iters;
        if (!seg.converged) {
          failed = true;
          break;
        }
        kappa = seg.kappa;
      }
      out.newton_iters += iters;
      if (!failed) {
        direct.kappa = kappa;
        direct.converged = true;
        out.homotopy_segments = segments;
        done = true;
      }
    }
    if (!done)
      throw NewtonDivergence(
          "position solve failed after continuation at maximum depth; "
          "step size too large or geometry left the admissible region");
  }

  out.kappa = direct.kappa;
  out.r_next = base + minv_grad * out.kappa;
  out.kappa_within_bound = out.kappa.norm() < c_kappa;
  if (!out.kappa_within_bound &&
      config.kappa_bound_mode == KappaBoundMode::kEnforce) {
    throw KappaBoundViolation(
        "converged position multiplier has norm " +
        std::to_string(out.kappa.norm()) + " >= c_kappa = " +
        std::to_string(c_kappa) + "; wrong root branch");
  }
  return out;
}

VelocitySolve solve_velocity(const SdaeProblem& problem,
                             const StepperConfig& config, const Vec& r,
                             const Vec& r_next, const Vec& v, double h,
                             const Vec& dw) {
  const ConstraintGeometry& geo = problem.geometry;
  const double eta = truncation_eta(problem, r, v, h);

  const Vec impulse = eta * h * problem.drift_a(r, v) +
                      problem.diffusion_b(r, v) * dw;
  const Vec v_free = v + geo.mass.apply_inverse(impulse);

  const Mat jac_next = geo.dg(r_next);
  const Mat minv_grad = geo.mass.apply_inverse(Mat(geo.dg(r).transpose()));
  const GramSystem system(Mat(jac_next * minv_grad), config.gram_cond_limit,
                          "velocity solve");
  const Vec lambda = system.solve(Vec(-jac_next * v_free));

  VelocitySolve out;
  out.lambda = lambda;
  out.v_next = v_free + minv_grad * lambda;

  const double tangency = (jac_next * out.v_next).norm();
  if (!(tangency <= 1e-10 * (1.0 + out.v_next.norm())))
    throw SingularGram("velocity solve left tangency residual " +
                       std::to_string(tangency));
  return out;
}

std::pair<State, StepRecord> step(const SdaeProblem& problem,
                                  const StepperConfig& config,
                                  const State& state, double h,
                                  const Vec& dw) {
  const double eta = truncation_eta(problem, state.r, state.v, h);
  const double c_eta = derived_constants(problem.geometry).c_eta;
  const double displacement = eta * h * state.v.norm();
  if (!(displacement <= c_eta * (1.0 + 1e-12)))
    throw Error("truncated displacement " + std::to_string(displacement) +
                " exceeds c_eta; truncation factor inconsistent");

  PositionSolve pos = solve_position(problem, config, state.r, state.v, h);
  VelocitySolve vel = solve_velocity(problem, config, state.r, pos.r_next,
                                     state.v, h, dw);

  StepRecord record;
  record.eta = eta;
  record.kappa = pos.kappa;
  record.lambda = vel.lambda;
  record.newton_iters = pos.newton_iters;
  record.homotopy_segments = pos.homotopy_segments;
  record.constraint_residual = problem.geometry.g(pos.r_next).norm();
  record.tangency_residual =
      (problem.geometry.dg(pos.r_next) * vel.v_next).norm();
  record.kappa_within_bound = pos.kappa_within_bound;

  return {State{std::move(pos.r_next), std::move(vel.v_next)},
          std::move(record)};
}

Vec lambda_leading_term(const SdaeProblem& problem, const Vec& r, const Vec& v,
                        double h, const Vec& dw) {
  const ConstraintGeometry& geo = problem.geometry;
  const double eta = truncation_eta(problem, r, v, h);

  const Vec impulse = eta * h * problem.drift_a(r, v) +
                      problem.diffusion_b(r, v) * dw;
  const Mat jac = geo.dg(r);
  const Vec rhs = jac * geo.mass.apply_inverse(impulse) +
                  eta * h * geo.d2g(r, v, v);
  const GramSystem gram(gram_matrix(geo, r), 1e12, "lambda leading term");
  return -gram.solve(rhs);
}

KappaProbe probe_kappa_root(const SdaeProblem& problem,
                            const StepperConfig& config, const Vec& r,
                            const Vec& v, double h, const Vec& kappa0) {
  const ConstraintGeometry& geo = problem.geometry;
  const double eta = truncation_eta(problem, r, v, h);
  const Vec base = r + eta * h * v;
  const Mat minv_grad = geo.mass.apply_inverse(Mat(geo.dg(r).transpose()));

  NewtonResult res = newton_kappa(geo, base, minv_grad, Vec::Zero(geo.m),
                                  kappa0, config, 0.0);
  KappaProbe probe;
  probe.kappa = res.kappa;
  probe.residual = res.residual;
  probe.iters = res.iters;
  probe.converged = res.converged;
  probe.within_bound =
      res.kappa.norm() < derived_constants(geo).c_kappa;
  return probe;
}

}  // namespace sdae
