#include "sdae/stochastics.hpp"

#include <cmath>
#include <numbers>

#include "sdae/errors.hpp"

namespace sdae {

namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t counter_word(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter) {
  std::uint64_t z = splitmix64(seed);
  z = splitmix64(z ^ (stream + 0x632be59bd9b4e019ull));
  return splitmix64(z ^ counter);
}

double uniform01(std::uint64_t seed, std::uint64_t stream,
                 std::uint64_t counter) {
  const std::uint64_t bits = counter_word(seed, stream, counter) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter) {
  const double u1 = uniform01(seed, stream, 2 * counter);
  const double u2 = uniform01(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

BrownianPath::BrownianPath(int ell, double horizon, int n_max,
                           std::uint64_t seed, std::uint64_t stream_id)
    : ell_(ell),
      horizon_(horizon),
      n_max_(n_max),
      seed_(seed),
      stream_id_(stream_id) {
  if (ell < 1) throw Error("BrownianPath: ell must be >= 1");
  if (n_max < 1) throw Error("BrownianPath: n_max must be >= 1");
  if (!(horizon > 0.0)) throw Error("BrownianPath: horizon must be positive");

  const double scale = std::sqrt(horizon / static_cast<double>(n_max));
  fine_.resize(static_cast<std::size_t>(n_max) * ell);
  for (int k = 0; k < n_max; ++k) {
    for (int j = 0; j < ell; ++j) {
      const std::uint64_t counter = static_cast<std::uint64_t>(k) * ell + j;
      fine_[static_cast<std::size_t>(k) * ell + j] =
          scale * standard_normal(seed, stream_id, counter);
    }
  }
}

std::vector<Eigen::VectorXd> BrownianPath::increments_at(int n) const {
  if (n < 1 || n_max_ % n != 0) {
    throw InvalidResolution("increments_at: " + std::to_string(n) +
                            " does not divide n_max = " +
                            std::to_string(n_max_));
  }
  int ratio = n_max_ / n;
  if ((ratio & (ratio - 1)) != 0) {
    throw InvalidResolution("increments_at: n_max / n = " +
                            std::to_string(ratio) +
                            " is not a power of two (dyadic grids only)");
  }

  // Pairwise halving; any two resolutions along a dyadic chain share the
  // same tree nodes, which makes the coupling exact in floating point.
  std::vector<double> level = fine_;
  int steps = n_max_;
  while (steps > n) {
    steps /= 2;
    for (int k = 0; k < steps; ++k) {
      for (int j = 0; j < ell_; ++j) {
        level[static_cast<std::size_t>(k) * ell_ + j] =
            level[static_cast<std::size_t>(2 * k) * ell_ + j] +
            level[static_cast<std::size_t>(2 * k + 1) * ell_ + j];
      }
    }
    level.resize(static_cast<std::size_t>(steps) * ell_);
  }

  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out[k] = Eigen::Map<const Eigen::VectorXd>(
        level.data() + static_cast<std::size_t>(k) * ell_, ell_);
  }
  return out;
}

BrownianPath sample_path(int ell, double horizon, int n_max,
                         std::uint64_t seed, std::uint64_t stream_id) {
  return BrownianPath(ell, horizon, n_max, seed, stream_id);
}

}  // namespace sdae
