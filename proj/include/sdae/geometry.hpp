#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>
#include <functional>
#include <vector>

namespace sdae {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric positive definite mass matrix with its factorizations.
/// Provides M^{-1} x and M^{1/2} x applications; the square root is only
/// needed for the weighted phase-space norm, never inside the stepper.
class MassMatrix {
 public:
  /// Validates symmetry and positive definiteness (Cholesky must succeed).
  explicit MassMatrix(Mat m);

  static MassMatrix identity(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  bool is_identity() const { return identity_; }
  const Mat& matrix() const { return m_; }

  Vec apply_inverse(const Vec& x) const;
  Mat apply_inverse(const Mat& x) const;
  Vec apply_sqrt(const Vec& x) const;

  /// Smallest eigenvalue, for norm-equivalence constants in diagnostics.
  double min_eigenvalue() const { return min_eig_; }

 private:
  Mat m_;
  Eigen::LLT<Mat> llt_;
  Mat sqrt_;
  double min_eig_ = 1.0;
  bool identity_ = false;
};

/// Constraint function together with its derivatives, the mass matrix and
/// the constants describing the admissible neighborhood of the manifold.
///
/// The second derivative is exposed as a bilinear action
/// (x; y, z) -> D2g(x)(y, z) in R^m rather than a stored rank-3 tensor;
/// the solvers only ever need directional evaluations.
struct ConstraintGeometry {
  int n = 0;  ///< ambient position dimension
  int m = 0;  ///< number of constraints, m < n

  std::function<Vec(const Vec&)> g;    ///< R^n -> R^m
  std::function<Mat(const Vec&)> dg;   ///< Jacobian, m x n
  std::function<Vec(const Vec&, const Vec&, const Vec&)> d2g;  ///< (x; y, z)

  MassMatrix mass = MassMatrix::identity(0);

  double epsilon = 0.0;  ///< neighborhood radius of the admissible region
  double c_g = 1.0;      ///< bound on the constraint-derivative quantities
};

/// Validates dimensions and constants; throws Error on violations.
ConstraintGeometry make_constraint_geometry(
    int n, int m, std::function<Vec(const Vec&)> g,
    std::function<Mat(const Vec&)> dg,
    std::function<Vec(const Vec&, const Vec&, const Vec&)> d2g,
    MassMatrix mass, double epsilon, double c_g);

/// Truncation and multiplier-bound constants derived from c_g.
struct DerivedConstants {
  double c_eta;    ///< 1 / (4 c_g^3)
  double c_kappa;  ///< 1 / (8 c_g^4)
};

DerivedConstants derived_constants(double c_g);
inline DerivedConstants derived_constants(const ConstraintGeometry& geo) {
  return derived_constants(geo.c_g);
}

/// Gram matrix Dg(x) M^{-1} Dg(x)^T, symmetrized. For x in the admissible
/// neighborhood it is symmetric positive definite; degeneracy is detected
/// at solve sites, not here.
Mat gram_matrix(const ConstraintGeometry& geo, const Vec& x);

/// Factorization of a small m x m Gram-type matrix with a 2-norm condition
/// estimate. Throws SingularGram when the condition number exceeds the
/// limit, which signals that a state left the admissible neighborhood.
class GramSystem {
 public:
  GramSystem(const Mat& a, double cond_limit, const char* context);

  Vec solve(const Vec& rhs) const;
  Mat solve(const Mat& rhs) const;
  double condition() const { return condition_; }

 private:
  Eigen::JacobiSVD<Mat> svd_;
  double condition_;
};

/// Orthogonal projection (in the M^{-1/2}-weighted sense) applied to z:
/// z - grad g(x) G^{-1}(x) Dg(x) M^{-1} z.
Vec projector_apply(const ConstraintGeometry& geo, const Vec& x, const Vec& z,
                    double cond_limit = 1e12);

/// Finite-difference validation of dg against g and d2g against dg.
struct DerivativeCheckReport {
  struct Sample {
    double dg_error = 0.0;   ///< max relative error, dg vs central FD of g
    double d2g_error = 0.0;  ///< max relative error, d2g vs central FD of dg
    bool ok = true;
  };
  std::vector<Sample> samples;
  double tolerance = 0.0;  ///< 10 * fd_step

  bool all_ok() const;
  double max_dg_error() const;
  double max_d2g_error() const;
};

DerivativeCheckReport check_derivatives(const ConstraintGeometry& geo,
                                        const std::vector<Vec>& samples,
                                        double fd_step);

/// Empirical estimate of c_g: the sampled supremum of the five derivative /
/// Gram quantities, inflated by a safety margin and clamped at 1. The
/// first three quantities are evaluated at on-manifold samples, the second
/// derivative norms at ambient samples (third-derivative norms by finite
/// differences of d2g). A heuristic lower estimate of the true supremum.
double estimate_cg(const ConstraintGeometry& geo,
                   const std::vector<Vec>& manifold_samples,
                   const std::vector<Vec>& ambient_samples,
                   double margin = 0.5);

}  // namespace sdae
