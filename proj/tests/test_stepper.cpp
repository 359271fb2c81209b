#include <cmath>

#include <Eigen/LU>
#include <doctest.h>

#include "sdae/errors.hpp"
#include "sdae/stepper.hpp"
#include "sdae/stochastics.hpp"
#include "test_helpers.hpp"

using namespace sdae;
using namespace sdae::testing;

TEST_CASE("truncation factor") {
  // c_g = 1 gives c_eta = 1/4
  const auto p = make_pendulum(1.0, 1.0);
  Vec r(2), v(2);
  r << 1.0, 0.0;

  v << 0.0, 2.0;  // max(2, 4, 1) * 0.1 = 0.4
  CHECK(truncation_eta(p, r, v, 0.1) == doctest::Approx(0.625).epsilon(1e-15));

  const auto free = make_pendulum(0.0, 1.0);
  v << 0.0, 0.1;
  CHECK(truncation_eta(free, r, v, 1e-6) == 1.0);
  CHECK(truncation_eta(free, r, Vec(Vec::Zero(2)), 0.5) == 1.0);

  SUBCASE("monotone in h, bounded displacement") {
    const auto pend = make_pendulum(1.0);  // default c_g = 2
    const double c_eta = derived_constants(pend.geometry).c_eta;
    for (int i = 0; i < 20; ++i) {
      const State s = circle_state(0.37 * i, 0.3 * i);
      double prev = 1.0;
      for (double h : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const double eta = truncation_eta(pend, s.r, s.v, h);
        CHECK(eta > 0.0);
        CHECK(eta <= 1.0);
        CHECK(eta <= prev + 1e-15);
        CHECK(eta * s.v.norm() * h <= c_eta * (1.0 + 1e-12));
        prev = eta;
      }
    }
  }
}

TEST_CASE("position solve matches the radial closed form") {
  const auto p = make_pendulum(0.0, 1.0);
  const StepperConfig config;
  Vec r(2), v(2);
  r << 1.0, 0.0;
  v << 0.0, 0.5;
  const double h = 0.1;
  REQUIRE(truncation_eta(p, r, v, h) == 1.0);

  const auto solve = solve_position(p, config, r, v, h);
  const double expected = 1.0 - std::sqrt(1.0 - 0.0025);
  CHECK(std::abs(solve.kappa(0) - expected) <= 1e-12);
  CHECK(std::abs(solve.r_next(0) - (1.0 - expected)) <= 1e-12);
  CHECK(std::abs(solve.r_next(1) - 0.05) <= 1e-15);
  CHECK(std::abs(solve.r_next.norm() - 1.0) <= 1e-12);
  CHECK(solve.kappa_within_bound);
  CHECK(solve.homotopy_segments == 0);
}

TEST_CASE("position solve agrees with a bisection oracle") {
  const auto p = make_pendulum(1.0, 1.0);
  const StepperConfig config;
  for (int i = 0; i < 50; ++i) {
    const State s = circle_state(0.7 + 0.13 * i, 0.1 + 0.02 * i);
    const double h = 0.001 * (1 + i % 7);
    const double eta = truncation_eta(p, s.r, s.v, h);
    const Vec base = s.r + eta * h * s.v;

    const double oracle = bisect(
        [&](double kappa) {
          return p.geometry.g(Vec(base - kappa * s.r))(0);
        },
        -0.5, 0.5);
    const auto solve = solve_position(p, config, s.r, s.v, h);
    CHECK(std::abs(solve.kappa(0) - oracle) <= 1e-12);
  }
}

TEST_CASE("zero displacement keeps the position fixed") {
  const auto p = make_pendulum(1.0);
  const StepperConfig config;
  const State s = circle_state(1.1, 0.0);
  const auto solve = solve_position(p, config, s.r, s.v, 0.25);
  CHECK(solve.kappa.norm() == 0.0);
  CHECK((solve.r_next - s.r).norm() == 0.0);
}

TEST_CASE("the far root is rejected by the multiplier bound") {
  const auto p = make_pendulum(0.0, 1.0);  // c_kappa = 1/8
  Vec r(2), v(2);
  r << 1.0, 0.0;
  v << 0.0, 0.5;
  const double h = 0.1;  // eta = 1, ||eta v h|| = 0.05

  StepperConfig config;
  const auto near = solve_position(p, config, r, v, h);
  CHECK(near.kappa.norm() < 1.0 / 8.0);

  // probe the second root from the far side; it exists but violates the
  // bound
  config.kappa_bound_mode = KappaBoundMode::kWarn;
  const auto far = probe_kappa_root(p, config, r, v, h, Vec(2.0 * Vec::Ones(1)));
  CHECK(far.converged);
  const double expected_far = 1.0 + std::sqrt(1.0 - 0.0025);
  CHECK(std::abs(far.kappa(0) - expected_far) <= 1e-9);
  CHECK_FALSE(far.within_bound);
}

TEST_CASE("bound violations throw in enforce mode and pass in warn mode") {
  // Start the position solve off the manifold so the nearest root is large.
  const auto p = make_pendulum(0.0, 1.0);
  Vec r(2);
  r << 1.3, 0.0;
  StepperConfig config;
  CHECK_THROWS_AS(solve_position(p, config, r, Vec(Vec::Zero(2)), 0.01),
                  KappaBoundViolation);

  config.kappa_bound_mode = KappaBoundMode::kWarn;
  const auto solve = solve_position(p, config, r, Vec(Vec::Zero(2)), 0.01);
  CHECK_FALSE(solve.kappa_within_bound);
  CHECK(std::abs(solve.kappa(0) - (1.0 - 1.0 / 1.3)) <= 1e-12);
}

TEST_CASE("degenerate gram matrix raises SingularGram") {
  const auto p = make_pendulum(0.0);
  const StepperConfig config;
  CHECK_THROWS_AS(
      solve_position(p, config, Vec(Vec::Zero(2)), Vec(Vec::Zero(2)), 0.1),
      SingularGram);
}

TEST_CASE("unreachable constraints raise NewtonDivergence") {
  // Mass chosen so the correction direction M^{-1} grad g(r) points almost
  // tangentially; from an off-manifold start the correction line misses the
  // circle entirely and no root exists.
  Mat minv(2, 2);
  minv << 0.25, 0.97, 0.97, 4.0;
  const Mat m = minv.inverse();
  auto geo = make_constraint_geometry(
      2, 1,
      [](const Vec& x) {
        Vec out(1);
        out(0) = 0.5 * (1.0 - x.squaredNorm());
        return out;
      },
      [](const Vec& x) {
        Mat out(1, 2);
        out.row(0) = -x.transpose();
        return out;
      },
      [](const Vec&, const Vec& y, const Vec& z) {
        Vec out(1);
        out(0) = -y.dot(z);
        return out;
      },
      MassMatrix(m), 0.5, 1.0);

  SdaeProblem p;
  p.geometry = geo;
  p.ell = 2;
  p.drift_a = [](const Vec&, const Vec&) { return Vec(Vec::Zero(2)); };
  p.diffusion_b = [](const Vec&, const Vec&) { return Mat(Mat::Identity(2, 2)); };
  p.initial = State{Vec::Unit(2, 0), Vec::Zero(2)};

  Vec r(2);
  r << 1.2, 0.5;
  StepperConfig config;
  config.kappa_bound_mode = KappaBoundMode::kWarn;
  CHECK_THROWS_AS(solve_position(p, config, r, Vec(Vec::Zero(2)), 0.01),
                  NewtonDivergence);
}

TEST_CASE("velocity solve matches the scalar closed form") {
  const auto p = make_pendulum(0.0, 1.0);
  const StepperConfig config;
  Vec r(2), v(2);
  r << 1.0, 0.0;
  v << 0.0, 0.5;
  const double h = 0.1;

  const auto pos = solve_position(p, config, r, v, h);
  const auto vel = solve_velocity(p, config, r, pos.r_next, v, h,
                                  Vec(Vec::Zero(2)));

  // lambda = <r_next, v> / <r_next, r> restores tangency; magnitude from
  // the worked radial example
  const double expected = pos.r_next.dot(v) / pos.r_next.dot(r);
  CHECK(std::abs(expected - 2.5031e-2) < 1e-6);
  CHECK(std::abs(vel.lambda(0) - expected) <= 1e-14);
  CHECK((vel.v_next - (v - expected * r)).norm() <= 1e-14);
  CHECK(std::abs(pos.r_next.dot(vel.v_next)) <= 1e-12);
}

TEST_CASE("tangent updates need no velocity multiplier") {
  const auto p = make_pendulum(0.0, 1.0);
  const StepperConfig config;
  const State s = circle_state(0.3, 0.8);
  const auto vel =
      solve_velocity(p, config, s.r, s.r, s.v, 0.01, Vec(Vec::Zero(2)));
  CHECK(vel.lambda.norm() == 0.0);
  CHECK((vel.v_next - s.v).norm() == 0.0);
}

TEST_CASE("velocity solve restores tangency on the fiber chain") {
  const auto chain = make_fiber_chain(3, 1.0);
  const StepperConfig config;
  const State s = chain_state_with_motion(3, 1.0, 0.4);
  const double h = 0.01;

  Vec dw(chain.ell);
  for (int i = 0; i < chain.ell; ++i)
    dw(i) = 0.1 * standard_normal(55, 0, i);

  const auto pos = solve_position(chain, config, s.r, s.v, h);
  const auto vel = solve_velocity(chain, config, s.r, pos.r_next, s.v, h, dw);
  CHECK((chain.geometry.dg(pos.r_next) * vel.v_next).norm() <= 1e-10);
}

TEST_CASE("step composes the two solves") {
  const auto p = make_pendulum(0.0, 1.0);
  const StepperConfig config;
  const State s = circle_state(0.6, 0.5);
  const double h = 0.05;
  Vec dw = Vec::Zero(2);

  const auto [next, record] = step(p, config, s, h, dw);
  const auto pos = solve_position(p, config, s.r, s.v, h);
  const auto vel = solve_velocity(p, config, s.r, pos.r_next, s.v, h, dw);
  CHECK((next.r - pos.r_next).norm() == 0.0);
  CHECK((next.v - vel.v_next).norm() == 0.0);
  CHECK(record.eta == 1.0);
  CHECK(record.constraint_residual <= config.newton_tol);
  CHECK(record.tangency_residual <= 1e-10 * (1.0 + next.v.norm()));
}

TEST_CASE("a resting state is a fixed point") {
  const auto p = make_pendulum(0.0);
  const StepperConfig config;
  State s;
  s.r = Vec(2);
  s.r << std::cos(0.4), std::sin(0.4);
  s.v = Vec::Zero(2);
  const auto [next, record] = step(p, config, s, 0.1, Vec(Vec::Zero(2)));
  CHECK((next.r - s.r).norm() == 0.0);
  CHECK((next.v - s.v).norm() == 0.0);
  CHECK(record.kappa.norm() == 0.0);
  CHECK(record.lambda.norm() == 0.0);
}

TEST_CASE("steps are bit-deterministic") {
  const auto p = make_pendulum(1.0);
  const StepperConfig config;
  const State s = circle_state(1.0, 0.7);
  Vec dw(2);
  dw << 0.013, -0.021;
  const auto [a, ra] = step(p, config, s, 0.01, dw);
  const auto [b, rb] = step(p, config, s, 0.01, dw);
  CHECK((a.r - b.r).norm() == 0.0);
  CHECK((a.v - b.v).norm() == 0.0);
  CHECK(ra.lambda(0) == rb.lambda(0));
  CHECK(ra.kappa(0) == rb.kappa(0));
}

TEST_CASE("leading multiplier term") {
  const auto p = make_pendulum(0.0, 1.0);

  SUBCASE("vanishes with all inputs") {
    const State rest{Vec::Unit(2, 0), Vec::Zero(2)};
    CHECK(lambda_leading_term(p, rest.r, rest.v, 0.1, Vec(Vec::Zero(2)))
              .norm() == 0.0);
  }

  SUBCASE("pendulum symbolic value eta ||v||^2 h") {
    const State s = circle_state(0.9, 0.6);
    const double h = 0.02;
    const double eta = truncation_eta(p, s.r, s.v, h);
    const Vec lead = lambda_leading_term(p, s.r, s.v, h, Vec(Vec::Zero(2)));
    CHECK(lead(0) ==
          doctest::Approx(eta * s.v.squaredNorm() * h).epsilon(1e-13));
  }
}

TEST_CASE("multiplier decomposition remainder scalings") {
  const StepperConfig config;
  std::vector<double> hs;
  for (int k = 4; k <= 10; ++k) hs.push_back(std::pow(2.0, -k));

  auto drift_slope = [&](const SdaeProblem& p, const State& s) {
    std::vector<double> res;
    for (double h : hs) {
      const auto pos = solve_position(p, config, s.r, s.v, h);
      const auto vel = solve_velocity(p, config, s.r, pos.r_next, s.v, h,
                                      Vec(Vec::Zero(p.ell)));
      const Vec lead =
          lambda_leading_term(p, s.r, s.v, h, Vec(Vec::Zero(p.ell)));
      res.push_back((vel.lambda - lead).norm());
    }
    return loglog_slope(hs, res);
  };

  auto noise_slope = [&](const SdaeProblem& p, const State& s) {
    const Vec dw = generic_unit(p.ell, 55);
    std::vector<double> res;
    for (double h : hs) {
      const auto pos = solve_position(p, config, s.r, s.v, h);
      const Vec l0 = solve_velocity(p, config, s.r, pos.r_next, s.v, h,
                                    Vec(Vec::Zero(p.ell)))
                         .lambda;
      const Vec l1 =
          solve_velocity(p, config, s.r, pos.r_next, s.v, h, dw).lambda;
      const Vec lead0 =
          lambda_leading_term(p, s.r, s.v, h, Vec(Vec::Zero(p.ell)));
      const Vec lead1 = lambda_leading_term(p, s.r, s.v, h, dw);
      res.push_back(((l1 - l0) - (lead1 - lead0)).norm());
    }
    return loglog_slope(hs, res);
  };

  const auto pend = make_pendulum(1.0, 1.0);
  const State ps = circle_state(0.7, 0.8);
  CHECK(drift_slope(pend, ps) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(noise_slope(pend, ps) >= 0.9);

  const auto chain = make_fiber_chain(3, 1.0, {1.0, 0.5, 1.0}, 1.0);
  const State cs = random_chain_state(3, 1.0, 77, 1, 0.4);
  CHECK(drift_slope(chain, cs) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(noise_slope(chain, cs) >= 0.9);
}
