#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace sdae {

// Counter-based deterministic RNG. Every draw is a pure function of
// (seed, stream, counter), so Monte Carlo workers need no shared state.

/// 64-bit finalizer-style hash, one uniform word per (seed, stream, counter).
std::uint64_t counter_word(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t counter);

/// Uniform draw in the open interval (0, 1).
double uniform01(std::uint64_t seed, std::uint64_t stream,
                 std::uint64_t counter);

/// Standard normal draw (Box-Muller on two counter-indexed uniforms).
double standard_normal(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter);

/// A Wiener path on [0, T] stored at its finest resolution. Coarser
/// resolutions are exact dyadic block sums of the fine increments, so all
/// resolutions of one sample are driven by the same underlying path.
class BrownianPath {
 public:
  BrownianPath(int ell, double horizon, int n_max, std::uint64_t seed,
               std::uint64_t stream_id);

  int ell() const { return ell_; }
  double horizon() const { return horizon_; }
  int n_max() const { return n_max_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Fine increments, row-major (n_max rows of ell components), each
  /// distributed N(0, (T/n_max) Id).
  const std::vector<double>& fine() const { return fine_; }

  /// Increments on the grid with n steps. Requires n to divide n_max with a
  /// power-of-two ratio; the block sums are computed pairwise up the dyadic
  /// tree so that coarsenings of coarsenings agree bit-for-bit.
  /// Throws InvalidResolution otherwise.
  std::vector<Eigen::VectorXd> increments_at(int n) const;

 private:
  int ell_;
  double horizon_;
  int n_max_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::vector<double> fine_;
};

/// Builds the path for one Monte Carlo stream.
BrownianPath sample_path(int ell, double horizon, int n_max,
                         std::uint64_t seed, std::uint64_t stream_id);

}  // namespace sdae
