#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "sdae/errors.hpp"
#include "sdae/stochastics.hpp"

using namespace sdae;

namespace {

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

TEST_CASE("paths are deterministic in (seed, stream)") {
  const BrownianPath a = sample_path(1, 1.0, 4, 12345, 0);
  const BrownianPath b = sample_path(1, 1.0, 4, 12345, 0);
  REQUIRE(a.fine().size() == 4);
  for (std::size_t i = 0; i < a.fine().size(); ++i)
    CHECK(a.fine()[i] == b.fine()[i]);

  const BrownianPath c = sample_path(1, 1.0, 4, 12345, 1);
  bool any_different = false;
  for (std::size_t i = 0; i < a.fine().size(); ++i)
    any_different = any_different || a.fine()[i] != c.fine()[i];
  CHECK(any_different);
}

TEST_CASE("coarse increments are exact block sums of fine ones") {
  const BrownianPath path = sample_path(1, 1.0, 4, 7, 3);
  const auto& f = path.fine();

  const auto at2 = path.increments_at(2);
  CHECK(at2.size() == 2);
  CHECK(at2[0](0) == f[0] + f[1]);
  CHECK(at2[1](0) == f[2] + f[3]);

  const auto at1 = path.increments_at(1);
  CHECK(at1.size() == 1);
  CHECK(at1[0](0) == (f[0] + f[1]) + (f[2] + f[3]));

  CHECK(path.increments_at(4)[3](0) == f[3]);
}

TEST_CASE("non-dyadic resolutions are rejected") {
  const BrownianPath path = sample_path(2, 1.0, 4, 7, 0);
  CHECK_THROWS_AS(path.increments_at(3), InvalidResolution);
  CHECK_THROWS_AS(path.increments_at(0), InvalidResolution);
  CHECK_THROWS_AS(path.increments_at(8), InvalidResolution);

  const BrownianPath p12 = sample_path(1, 1.0, 12, 7, 0);
  CHECK_NOTHROW(p12.increments_at(3));       // ratio 4
  CHECK_THROWS_AS(p12.increments_at(4), InvalidResolution);  // ratio 3
}

TEST_CASE("coupling is bit-exact along dyadic chains") {
  const BrownianPath path = sample_path(3, 2.0, 64, 99, 5);
  for (const auto& [n1, n2] : std::vector<std::pair<int, int>>{
           {4, 16}, {8, 16}, {16, 64}, {1, 64}, {32, 64}}) {
    const auto coarse = path.increments_at(n1);
    auto level = path.increments_at(n2);
    // pairwise halving, same reduction the path itself uses
    while (static_cast<int>(level.size()) > n1) {
      std::vector<Eigen::VectorXd> next(level.size() / 2);
      for (std::size_t k = 0; k < next.size(); ++k)
        next[k] = level[2 * k] + level[2 * k + 1];
      level = std::move(next);
    }
    for (int k = 0; k < n1; ++k)
      for (int j = 0; j < 3; ++j) CHECK(coarse[k](j) == level[k](j));
  }
}

TEST_CASE("increments across streams are uncorrelated") {
  const int n = 10000;
  const BrownianPath a = sample_path(1, 1.0, n, 424242, 0);
  const BrownianPath b = sample_path(1, 1.0, n, 424242, 1);
  double sxy = 0, sxx = 0, syy = 0;
  for (int k = 0; k < n; ++k) {
    sxy += a.fine()[k] * b.fine()[k];
    sxx += a.fine()[k] * a.fine()[k];
    syy += b.fine()[k] * b.fine()[k];
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  CHECK(std::abs(rho) < 0.05);
}

TEST_CASE("terminal value has the right variance") {
  const int paths = 10000;
  const double T = 1.0;
  double sum = 0, sum2 = 0;
  for (int s = 0; s < paths; ++s) {
    const BrownianPath p = sample_path(1, T, 4, 777, s);
    double wT = 0;
    for (double inc : p.fine()) wT += inc;
    sum += wT;
    sum2 += wT * wT;
  }
  const double mean = sum / paths;
  const double var = sum2 / paths - mean * mean;
  CHECK(std::abs(var - T) < 0.05 * T);
  CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("per-increment variance matches T/N within 3 standard errors") {
  const int n = 1 << 14;
  const double T = 2.0;
  const double h = T / n;
  const BrownianPath p = sample_path(1, T, n, 31337, 0);
  double sum = 0, sum2 = 0;
  for (double inc : p.fine()) {
    sum += inc;
    sum2 += inc * inc;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se = h * std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(var - h) < 3.0 * se);
}

TEST_CASE("standardized increments pass a Kolmogorov-Smirnov test") {
  const int n = 100000;
  std::vector<double> samples(n);
  for (int i = 0; i < n; ++i) samples[i] = standard_normal(2718, 0, i);
  std::sort(samples.begin(), samples.end());

  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = standard_normal_cdf(samples[i]);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
  }
  // 1% critical value for large n is about 1.628 / sqrt(n); fixed seed
  // keeps this deterministic.
  CHECK(d * std::sqrt(static_cast<double>(n)) < 1.63);
}
