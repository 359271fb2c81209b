#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdae/geometry.hpp"

namespace sdae {

/// Position-velocity pair.
struct State {
  Vec r;
  Vec v;
};

/// Growth constants for the coefficient diagnostics. Diagnostic-only;
/// the stepper never reads them.
struct GrowthMeta {
  double c_a = 0.0;
  double p_a = 1.0;
  double c_b = 0.0;
};

/// Full problem definition: constrained geometry, drift and diffusion
/// coefficients, noise dimension and initial data on the tangent bundle.
/// Coefficient maps must be pure and safe for concurrent invocation.
struct SdaeProblem {
  ConstraintGeometry geometry;
  int ell = 1;
  std::function<Vec(const Vec&, const Vec&)> drift_a;      ///< a(r, v)
  std::function<Mat(const Vec&, const Vec&)> diffusion_b;  ///< B(r, v), n x ell
  State initial;
  std::optional<GrowthMeta> growth_meta;
};

/// (||g(r)||, ||Dg(r) v||) for on-manifold checks.
std::pair<double, double> manifold_residuals(const ConstraintGeometry& geo,
                                             const State& state);

/// Throws Error when the state is not on the tangent bundle within tol.
void require_on_manifold(const ConstraintGeometry& geo, const State& state,
                         double tol = 1e-10);

/// Unit-sphere constraint g(x) = (1 - ||x||^2) / 2 in ambient dimension n.
ConstraintGeometry unit_sphere_geometry(int n, double c_g = 2.0,
                                        double epsilon = 0.5);

/// Planar pendulum with unit length and unit mass: n = 2, m = 1, ell = 2,
/// drift (0, -c_gravity), identity diffusion. Initial state ((1,0),(0,0)).
SdaeProblem make_pendulum(double c_gravity, double c_g = 2.0);

/// Simplified force model for the inextensible chain: constant gravity,
/// linear bending through a squared discrete Laplacian, isotropic noise.
struct FiberForces {
  double gravity = 1.0;   ///< magnitude along -e3
  double bending = 0.1;   ///< bending stiffness
  double sigma = 1.0;     ///< isotropic diffusion scale
};

/// Chain of num_points points in R^3 with unit-distance constraints between
/// neighbours scaled by ds: n = 3 num_points, m = num_points - 1. The
/// initial configuration is a straight chain along e1 at rest.
SdaeProblem make_fiber_chain(int num_points, double ds,
                             FiberForces forces = {}, double c_g = 4.0);

/// Langevin-type problem on an arbitrary geometry:
/// a(x, y) = -potential_grad(x) - friction * y, B = sigma * Id (n x ell,
/// ell defaults to n).
SdaeProblem make_langevin(std::function<Vec(const Vec&)> potential_grad,
                          double friction, double sigma,
                          ConstraintGeometry geometry, int ell = 0);

/// One violated growth inequality at a sample point.
struct GrowthViolation {
  int sample = 0;
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Checks the one-sided linear growth of (y, a), the polynomial growth of a
/// and the linear growth of B at the given sample states. Empty result
/// means no violations. Throws MissingGrowthMeta when the problem carries
/// no growth constants.
std::vector<GrowthViolation> check_growth(const SdaeProblem& problem,
                                          const std::vector<State>& samples);

// Deterministic sample states for the built-in geometries, used by the
// validation command and by tests.

/// Random point on the unit sphere S^{n-1} with a tangent velocity of scale
/// vscale.
State random_sphere_state(int n, std::uint64_t seed, std::uint64_t index,
                          double vscale = 1.0);

/// Random chain configuration with exact link lengths ds and a velocity
/// satisfying the differentiated constraint.
State random_chain_state(int num_points, double ds, std::uint64_t seed,
                         std::uint64_t index, double vscale = 1.0);

}  // namespace sdae
