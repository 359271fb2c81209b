#include <cmath>

#include <doctest.h>

#include "sdae/errors.hpp"
#include "sdae/experiments.hpp"
#include "sdae/reference.hpp"
#include "test_helpers.hpp"

using namespace sdae;
using namespace sdae::testing;

TEST_CASE("inherent drift of the free pendulum is centripetal") {
  const auto p = make_pendulum(0.0);
  const double omega = 1.7;
  State s;
  s.r = Vec(2);
  s.r << 1.0, 0.0;
  s.v = Vec(2);
  s.v << 0.0, omega;

  const Vec drift = inherent_drift(p, s);
  CHECK(drift(0) == doctest::Approx(0.0));
  CHECK(drift(1) == doctest::Approx(omega));
  CHECK(drift(2) == doctest::Approx(-omega * omega).epsilon(1e-13));
  CHECK(drift(3) == doctest::Approx(0.0));

  // the inherent drift is orthogonal to v, so the free pendulum conserves
  // speed
  CHECK(std::abs(drift.tail(2).dot(s.v)) < 1e-13);
}

TEST_CASE("projection removes purely normal drift") {
  auto p = make_pendulum(0.0);
  p.drift_a = [](const Vec&, const Vec&) {
    Vec a(2);
    a << 3.0, 0.0;  // normal at r = (1, 0)
    return a;
  };
  const State s{Vec::Unit(2, 0), Vec::Zero(2)};
  CHECK(inherent_drift(p, s).tail(2).norm() < 1e-13);

  const State rest{Vec::Unit(2, 0), Vec::Zero(2)};
  const auto free = make_pendulum(0.0);
  CHECK(inherent_drift(free, rest).norm() == 0.0);
}

TEST_CASE("differentiated-constraint identity holds on all builtins") {
  auto grad = [](const Vec& x) {
    Vec g = Vec::Zero(x.size());
    const double z = x(x.size() - 1);
    g(x.size() - 1) = 4.0 * z * (z * z - 0.5);  // double well along e3
    return g;
  };
  const SdaeProblem problems[] = {
      make_pendulum(1.0), make_fiber_chain(3, 1.0),
      make_langevin(grad, 1.0, 0.8, unit_sphere_geometry(3))};

  for (const auto& p : problems) {
    for (int i = 0; i < 10; ++i) {
      const State s = p.geometry.n == 9
                          ? random_chain_state(3, 1.0, 23, i)
                          : random_sphere_state(p.geometry.n, 23, i);
      const Vec drift = inherent_drift(p, s);
      const Vec second = drift.tail(p.geometry.n);
      const Vec defect =
          p.geometry.dg(s.r) * second + p.geometry.d2g(s.r, s.v, s.v);
      CHECK(defect.norm() <= 1e-10 * (1.0 + second.norm()));
    }
  }
}

TEST_CASE("inherent diffusion projects columns onto the tangent space") {
  const auto p = make_pendulum(0.0);
  State s;
  s.r = Vec(2);
  s.r << 1.0, 0.0;
  s.v = Vec::Zero(2);

  const Mat diff = inherent_diffusion(p, s);
  REQUIRE(diff.rows() == 4);
  CHECK(diff.topRows(2).norm() == 0.0);
  CHECK(diff(2, 0) == doctest::Approx(0.0));
  CHECK(diff(2, 1) == doctest::Approx(0.0));
  CHECK(diff(3, 0) == doctest::Approx(0.0));
  CHECK(diff(3, 1) == doctest::Approx(1.0));

  const auto quiet = with_zero_noise(make_pendulum(0.0));
  CHECK(inherent_diffusion(quiet, s).norm() == 0.0);

  for (int i = 0; i < 10; ++i) {
    const State x = random_sphere_state(2, 29, i);
    const Mat d = inherent_diffusion(p, x);
    CHECK((p.geometry.dg(x.r) * d.bottomRows(2)).norm() <= 1e-10);
  }
}

TEST_CASE("stacked coefficient maps agree with the block evaluations") {
  const auto p = make_pendulum(1.0);
  const auto coeffs = make_inherent(p);
  for (int i = 0; i < 5; ++i) {
    const State s = random_sphere_state(2, 33, i);
    Vec x(4);
    x << s.r, s.v;
    const Vec drift = coeffs.drift(x);
    CHECK((drift - inherent_drift(p, s)).norm() == 0.0);
    CHECK((drift.head(2) - s.v).norm() == 0.0);
    const Mat diff = coeffs.diffusion(x);
    CHECK(diff.topRows(2).norm() == 0.0);
    CHECK((diff - inherent_diffusion(p, s)).norm() == 0.0);
  }
}

TEST_CASE("unconstrained Euler-Maruyama drifts off the manifold") {
  auto p = with_zero_noise(make_pendulum(0.0));
  p.initial.v = Vec(2);
  p.initial.v << 0.0, 1.0;

  const BrownianPath path = sample_path(p.ell, 1.0, 1 << 14, 3, 0);
  const auto traj = integrate_em(p, 1 << 14, path, /*truncated=*/false);
  const double deviation = std::abs(traj.states.back().r.norm() - 1.0);
  CHECK(deviation > 0.0);
  CHECK(deviation < 0.05);
}

TEST_CASE("trivial baseline step leaves the state unchanged") {
  const auto p = with_zero_noise(with_zero_drift(make_pendulum(0.0)));
  const BrownianPath path = sample_path(p.ell, 1.0, 1, 3, 0);
  const auto traj = integrate_em(p, 1, path, true);
  CHECK((traj.states[1].r - traj.states[0].r).norm() == 0.0);
  CHECK((traj.states[1].v - traj.states[0].v).norm() == 0.0);
}

TEST_CASE("truncation is inactive for slow motion") {
  auto p = make_pendulum(0.0);
  p.initial.v = Vec(2);
  p.initial.v << 0.0, 0.2;
  p.diffusion_b = [](const Vec&, const Vec&) {
    return Mat(0.1 * Mat::Identity(2, 2));
  };
  const BrownianPath path = sample_path(p.ell, 1.0, 64, 5, 0);
  const auto plain = integrate_em(p, 64, path, false);
  const auto truncated = integrate_em(p, 64, path, true);
  for (int k = 0; k <= 64; ++k) {
    CHECK((plain.states[k].r - truncated.states[k].r).norm() == 0.0);
    CHECK((plain.states[k].v - truncated.states[k].v).norm() == 0.0);
  }
}

TEST_CASE("multiplier quadrature") {
  const auto p = with_zero_noise(with_zero_drift(make_pendulum(0.0)));

  SUBCASE("vanishes for a resting trajectory") {
    std::vector<State> states(5, State{Vec::Unit(2, 0), Vec::Zero(2)});
    std::vector<Vec> increments(4, Vec::Zero(2));
    for (const Vec& m : mu_quadrature(p, states, increments, 0.25))
      CHECK(m.norm() == 0.0);
  }

  SUBCASE("recovers omega^2 t on exact circular motion") {
    const double omega = 0.8;
    const int n = 256;
    const double T = 1.0;
    std::vector<State> states;
    for (int k = 0; k <= n; ++k)
      states.push_back(circle_state(omega * T * k / n, omega));
    std::vector<Vec> increments(n, Vec::Zero(2));

    const auto mu = mu_quadrature(p, states, increments, T / n);
    CHECK(mu[0].norm() == 0.0);
    CHECK(mu[n](0) == doctest::Approx(omega * omega * T).epsilon(1e-12));
    CHECK(mu[n / 2](0) ==
          doctest::Approx(omega * omega * T / 2).epsilon(1e-12));
  }

  SUBCASE("single step equals the leading multiplier term at eta = 1") {
    const auto noisy = make_pendulum(1.0);
    const State s = circle_state(0.4, 0.3);
    const double h = 1e-3;
    Vec dw(2);
    dw << 0.02, -0.01;
    REQUIRE(truncation_eta(noisy, s.r, s.v, h) == 1.0);

    const auto mu = mu_quadrature(noisy, {s, s}, {dw}, h);
    const Vec lead = lambda_leading_term(noisy, s.r, s.v, h, dw);
    CHECK((mu[1] - lead).norm() <= 1e-15);
  }

  SUBCASE("grid mismatch is rejected") {
    std::vector<State> states(3, State{Vec::Unit(2, 0), Vec::Zero(2)});
    std::vector<Vec> increments(4, Vec::Zero(2));
    CHECK_THROWS_AS(mu_quadrature(p, states, increments, 0.1), GridMismatch);
  }
}

TEST_CASE("quadrature mu approaches the stepper's discrete mu") {
  const auto p = make_pendulum(1.0);
  const StepperConfig config;
  const BrownianPath path = sample_path(p.ell, 1.0, 1 << 9, 11, 0);

  auto deviation = [&](int n) {
    const Trajectory traj = integrate(p, config, n, path);
    const auto mu =
        mu_quadrature(p, traj.states, path.increments_at(n), 1.0 / n);
    double d = 0.0;
    for (int k = 0; k <= n; ++k)
      d = std::max(d, (mu[k] - traj.mu[k]).norm());
    return d;
  };

  const double coarse = deviation(1 << 5);
  const double fine = deviation(1 << 9);
  CHECK(fine < coarse);
}

TEST_CASE("weighted inner product uses the mass square root") {
  Mat m(2, 2);
  m << 4.0, 0.0, 0.0, 9.0;
  const MassMatrix mass(m);
  State x, y;
  x.r = Vec(2);
  x.r << 1.0, 2.0;
  x.v = Vec(2);
  x.v << 1.0, 0.0;
  y.r = Vec(2);
  y.r << 3.0, -1.0;
  y.v = Vec(2);
  y.v << 0.0, 2.0;
  // <x1, y1> + <M^(1/2) x2, M^(1/2) y2> = (3 - 2) + 0
  CHECK(starred_inner(mass, x, y) == doctest::Approx(1.0));
  CHECK(starred_norm(mass, x) ==
        doctest::Approx(std::sqrt(1.0 + 4.0 + 4.0)));
}

TEST_CASE("starred growth bound holds on sampled tangent states") {
  const auto pend = make_pendulum(1.0);
  const double c = starred_growth_bound(pend);
  for (int i = 0; i < 25; ++i) {
    State s = random_sphere_state(2, 61, i, 2.0);
    const Vec drift = inherent_drift(pend, s);
    const State d{drift.head(2), drift.tail(2)};
    const double lhs = starred_inner(pend.geometry.mass, s, d);
    const double nrm = starred_norm(pend.geometry.mass, s);
    CHECK(lhs <= c * (1.0 + nrm * nrm) + 1e-12);
  }

  auto no_meta = pend;
  no_meta.growth_meta.reset();
  CHECK_THROWS_AS(starred_growth_bound(no_meta), MissingGrowthMeta);
}
