#include "sdae/model.hpp"

#include <cmath>
#include <utility>

#include "sdae/errors.hpp"
#include "sdae/stochastics.hpp"

namespace sdae {

std::pair<double, double> manifold_residuals(const ConstraintGeometry& geo,
                                             const State& state) {
  return {geo.g(state.r).norm(), (geo.dg(state.r) * state.v).norm()};
}

void require_on_manifold(const ConstraintGeometry& geo, const State& state,
                         double tol) {
  const auto [gres, tres] = manifold_residuals(geo, state);
  if (!(gres <= tol))
    throw Error("initial position violates the constraint: ||g|| = " +
                std::to_string(gres));
  if (!(tres <= tol))
    throw Error("initial velocity is not tangent: ||Dg v|| = " +
                std::to_string(tres));
}

ConstraintGeometry unit_sphere_geometry(int n, double c_g, double epsilon) {
  auto g = [](const Vec& x) {
    Vec out(1);
    out(0) = 0.5 * (1.0 - x.squaredNorm());
    return out;
  };
  auto dg = [n](const Vec& x) {
    Mat out(1, n);
    out.row(0) = -x.transpose();
    return out;
  };
  auto d2g = [](const Vec&, const Vec& y, const Vec& z) {
    Vec out(1);
    out(0) = -y.dot(z);
    return out;
  };
  return make_constraint_geometry(n, 1, g, dg, d2g, MassMatrix::identity(n),
                                  epsilon, c_g);
}

SdaeProblem make_pendulum(double c_gravity, double c_g) {
  SdaeProblem p;
  p.geometry = unit_sphere_geometry(2, c_g);
  p.ell = 2;
  p.drift_a = [c_gravity](const Vec&, const Vec&) {
    Vec a(2);
    a << 0.0, -c_gravity;
    return a;
  };
  p.diffusion_b = [](const Vec&, const Vec&) { return Mat::Identity(2, 2); };
  p.initial.r = Vec(2);
  p.initial.r << 1.0, 0.0;
  p.initial.v = Vec::Zero(2);
  p.growth_meta = GrowthMeta{c_gravity + 1.0, 1.0, 2.0};
  require_on_manifold(p.geometry, p.initial, 1e-12);
  return p;
}

namespace {

// Squared discrete Laplacian over chain points, per coordinate; free ends.
Vec chain_bending_force(const Vec& x, int num_points, double stiffness) {
  const int interior = num_points - 2;
  Vec force = Vec::Zero(x.size());
  if (interior <= 0 || stiffness == 0.0) return force;

  Mat lap(interior, 3);  // second differences s_i, i = 1 .. num_points - 2
  for (int i = 1; i <= interior; ++i) {
    lap.row(i - 1) = x.segment(3 * (i - 1), 3) - 2.0 * x.segment(3 * i, 3) +
                     x.segment(3 * (i + 1), 3);
  }
  for (int i = 1; i <= interior; ++i) {
    const auto s = lap.row(i - 1);
    force.segment(3 * (i - 1), 3) -= stiffness * s;
    force.segment(3 * i, 3) += 2.0 * stiffness * s;
    force.segment(3 * (i + 1), 3) -= stiffness * s;
  }
  return force;
}

}  // namespace

SdaeProblem make_fiber_chain(int num_points, double ds, FiberForces forces,
                             double c_g) {
  if (num_points < 2) throw Error("fiber chain needs at least 2 points");
  if (!(ds > 0.0)) throw Error("fiber chain spacing must be positive");

  const int n = 3 * num_points;
  const int m = num_points - 1;
  const double inv_ds2 = 1.0 / (ds * ds);

  auto g = [m, inv_ds2](const Vec& x) {
    Vec out(m);
    for (int i = 0; i < m; ++i) {
      const Vec d = x.segment(3 * (i + 1), 3) - x.segment(3 * i, 3);
      out(i) = 0.5 - 0.5 * d.squaredNorm() * inv_ds2;
    }
    return out;
  };
  auto dg = [n, m, inv_ds2](const Vec& x) {
    Mat out = Mat::Zero(m, n);
    for (int i = 0; i < m; ++i) {
      const Vec d = x.segment(3 * (i + 1), 3) - x.segment(3 * i, 3);
      out.block(i, 3 * i, 1, 3) = inv_ds2 * d.transpose();
      out.block(i, 3 * (i + 1), 1, 3) = -inv_ds2 * d.transpose();
    }
    return out;
  };
  auto d2g = [m, inv_ds2](const Vec&, const Vec& y, const Vec& z) {
    Vec out(m);
    for (int i = 0; i < m; ++i) {
      const Vec dy = y.segment(3 * (i + 1), 3) - y.segment(3 * i, 3);
      const Vec dz = z.segment(3 * (i + 1), 3) - z.segment(3 * i, 3);
      out(i) = -dy.dot(dz) * inv_ds2;
    }
    return out;
  };

  SdaeProblem p;
  p.geometry = make_constraint_geometry(n, m, g, dg, d2g,
                                        MassMatrix::identity(n),
                                        0.5 * ds, c_g);
  p.ell = n;
  p.drift_a = [num_points, forces](const Vec& x, const Vec&) {
    Vec a = chain_bending_force(x, num_points, forces.bending);
    for (int i = 0; i < num_points; ++i) a(3 * i + 2) -= forces.gravity;
    return a;
  };
  const double sigma = forces.sigma;
  p.diffusion_b = [n, sigma](const Vec&, const Vec&) {
    return Mat(sigma * Mat::Identity(n, n));
  };

  p.initial.r = Vec::Zero(n);
  for (int i = 0; i < num_points; ++i) p.initial.r(3 * i) = i * ds;
  p.initial.v = Vec::Zero(n);

  const double npts = static_cast<double>(num_points);
  p.growth_meta = GrowthMeta{
      1.0 + forces.gravity * std::sqrt(npts) + 16.0 * forces.bending, 1.0,
      sigma * std::sqrt(3.0 * npts)};
  require_on_manifold(p.geometry, p.initial, 1e-12);
  return p;
}

SdaeProblem make_langevin(std::function<Vec(const Vec&)> potential_grad,
                          double friction, double sigma,
                          ConstraintGeometry geometry, int ell) {
  SdaeProblem p;
  const int n = geometry.n;
  p.geometry = std::move(geometry);
  p.ell = ell > 0 ? ell : n;
  p.drift_a = [grad = std::move(potential_grad), friction](const Vec& x,
                                                           const Vec& y) {
    return Vec(-grad(x) - friction * y);
  };
  const int w = p.ell;
  p.diffusion_b = [n, w, sigma](const Vec&, const Vec&) {
    return Mat(sigma * Mat::Identity(n, w));
  };
  p.initial.r = Vec::Unit(n, 0);
  p.initial.v = Vec::Zero(n);
  require_on_manifold(p.geometry, p.initial, 1e-10);
  return p;
}

std::vector<GrowthViolation> check_growth(const SdaeProblem& problem,
                                          const std::vector<State>& samples) {
  if (!problem.growth_meta)
    throw MissingGrowthMeta("check_growth: problem has no growth constants");
  const GrowthMeta meta = *problem.growth_meta;

  std::vector<GrowthViolation> violations;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    const State& s = samples[i];
    const double norm2 = s.r.squaredNorm() + s.v.squaredNorm();
    const double norm = std::sqrt(norm2);
    const Vec a = problem.drift_a(s.r, s.v);
    const Mat b = problem.diffusion_b(s.r, s.v);

    const double one_sided = s.r.dot(s.v) + s.v.dot(a);
    const double one_sided_bound = meta.c_a * (1.0 + norm2);
    if (one_sided > one_sided_bound)
      violations.push_back({i, "one-sided linear growth of (y, a)",
                            one_sided, one_sided_bound});

    const double a_bound = meta.c_a * (1.0 + std::pow(norm, meta.p_a));
    if (a.norm() > a_bound)
      violations.push_back({i, "polynomial growth of a", a.norm(), a_bound});

    const double b_bound = meta.c_b * (1.0 + norm);
    if (b.norm() > b_bound)
      violations.push_back({i, "linear growth of B", b.norm(), b_bound});
  }
  return violations;
}

State random_sphere_state(int n, std::uint64_t seed, std::uint64_t index,
                          double vscale) {
  Vec r(n), raw(n);
  const std::uint64_t base = index * static_cast<std::uint64_t>(2 * n);
  for (int i = 0; i < n; ++i) r(i) = standard_normal(seed, 11, base + i);
  for (int i = 0; i < n; ++i) raw(i) = standard_normal(seed, 12, base + n + i);
  r.normalize();
  Vec v = raw - raw.dot(r) * r;
  return State{r, Vec(vscale * v)};
}

State random_chain_state(int num_points, double ds, std::uint64_t seed,
                         std::uint64_t index, double vscale) {
  const int n = 3 * num_points;
  Vec r = Vec::Zero(n), v = Vec::Zero(n);
  std::uint64_t ctr = index * static_cast<std::uint64_t>(2 * n);

  auto normal3 = [&](std::uint64_t stream) {
    Vec u(3);
    for (int i = 0; i < 3; ++i) u(i) = standard_normal(seed, stream, ctr++);
    return u;
  };

  v.segment(0, 3) = vscale * normal3(14);
  for (int i = 0; i + 1 < num_points; ++i) {
    Vec dir = normal3(13);
    dir.normalize();
    r.segment(3 * (i + 1), 3) = r.segment(3 * i, 3) + ds * dir;
    // velocity difference orthogonal to the link keeps Dg v = 0
    Vec w = vscale * normal3(14);
    w -= w.dot(dir) * dir;
    v.segment(3 * (i + 1), 3) = v.segment(3 * i, 3) + w;
  }
  return State{r, v};
}

}  // namespace sdae
