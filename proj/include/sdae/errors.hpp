#pragma once

#include <stdexcept>
#include <string>

namespace sdae {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Gram matrix (or a Gram-like iteration matrix) is too ill-conditioned
/// to solve against. Signals that a state left the admissible neighborhood
/// of the constraint manifold.
class SingularGram : public Error {
 public:
  using Error::Error;
};

/// The position-constraint solve failed: direct Newton diverged and
/// continuation at maximum refinement depth did not converge either.
class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

/// The converged position multiplier violates the admissibility bound;
/// the solver landed on the wrong root branch.
class KappaBoundViolation : public Error {
 public:
  using Error::Error;
};

/// Requested a Brownian-path resolution that is not a dyadic coarsening of
/// the finest grid.
class InvalidResolution : public Error {
 public:
  using Error::Error;
};

/// Two trajectories do not share a compatible time grid.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// A growth diagnostic was requested but the problem carries no growth
/// constants.
class MissingGrowthMeta : public Error {
 public:
  using Error::Error;
};

/// A state acquired non-finite entries during integration.
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps a solver error with the index of the failing step.
class StepFailure : public Error {
 public:
  StepFailure(int step_index, const std::string& what)
      : Error("step " + std::to_string(step_index) + ": " + what),
        step_index_(step_index) {}

  int step_index() const { return step_index_; }

 private:
  int step_index_;
};

}  // namespace sdae
