#include "sdae/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sdae/errors.hpp"
#include "sdae/stochastics.hpp"

namespace sdae {

namespace {

double relative_error(double measured, double expected, double scale) {
  return std::abs(measured - expected) / std::max(1.0, scale);
}

}  // namespace

MassMatrix::MassMatrix(Mat m) : m_(std::move(m)) {
  const int n = static_cast<int>(m_.rows());
  if (m_.cols() != n) throw Error("mass matrix must be square");
  if (n > 0) {
    const double sym = (m_ - m_.transpose()).norm();
    if (sym > 1e-12 * std::max(1.0, m_.norm()))
      throw Error("mass matrix is not symmetric");
    m_ = 0.5 * (m_ + m_.transpose());

    identity_ = m_.isIdentity(0.0);
    if (!identity_) {
      llt_.compute(m_);
      if (llt_.info() != Eigen::Success)
        throw Error("mass matrix is not positive definite");
      Eigen::SelfAdjointEigenSolver<Mat> eig(m_);
      if (eig.eigenvalues().minCoeff() <= 0.0)
        throw Error("mass matrix is not positive definite");
      min_eig_ = eig.eigenvalues().minCoeff();
      sqrt_ = eig.operatorSqrt();
    }
  }
}

MassMatrix MassMatrix::identity(int n) {
  return MassMatrix(Mat::Identity(n, n));
}

Vec MassMatrix::apply_inverse(const Vec& x) const {
  if (identity_) return x;
  return llt_.solve(x);
}

Mat MassMatrix::apply_inverse(const Mat& x) const {
  if (identity_) return x;
  return llt_.solve(x);
}

Vec MassMatrix::apply_sqrt(const Vec& x) const {
  if (identity_) return x;
  return sqrt_ * x;
}

ConstraintGeometry make_constraint_geometry(
    int n, int m, std::function<Vec(const Vec&)> g,
    std::function<Mat(const Vec&)> dg,
    std::function<Vec(const Vec&, const Vec&, const Vec&)> d2g,
    MassMatrix mass, double epsilon, double c_g) {
  if (n < 2) throw Error("geometry: n must be >= 2");
  if (m < 1 || m >= n) throw Error("geometry: need 1 <= m < n");
  if (mass.dim() != n) throw Error("geometry: mass dimension mismatch");
  if (!(epsilon > 0.0)) throw Error("geometry: epsilon must be positive");
  if (!(c_g >= 1.0)) throw Error("geometry: c_g must be >= 1");
  ConstraintGeometry geo;
  geo.n = n;
  geo.m = m;
  geo.g = std::move(g);
  geo.dg = std::move(dg);
  geo.d2g = std::move(d2g);
  geo.mass = std::move(mass);
  geo.epsilon = epsilon;
  geo.c_g = c_g;
  return geo;
}

DerivedConstants derived_constants(double c_g) {
  if (!(c_g >= 1.0)) throw Error("derived_constants: c_g must be >= 1");
  return DerivedConstants{1.0 / (4.0 * c_g * c_g * c_g),
                          1.0 / (8.0 * c_g * c_g * c_g * c_g)};
}

Mat gram_matrix(const ConstraintGeometry& geo, const Vec& x) {
  const Mat jac = geo.dg(x);
  Mat g = jac * geo.mass.apply_inverse(Mat(jac.transpose()));
  g = 0.5 * (g + g.transpose()).eval();
  return g;
}

GramSystem::GramSystem(const Mat& a, double cond_limit, const char* context)
    : svd_(a, Eigen::ComputeThinU | Eigen::ComputeThinV) {
  const auto& sv = svd_.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  condition_ = (smin > 0.0) ? smax / smin
                            : std::numeric_limits<double>::infinity();
  if (!(condition_ <= cond_limit)) {
    throw SingularGram(std::string(context) +
                       ": condition estimate " + std::to_string(condition_) +
                       " exceeds limit");
  }
}

Vec GramSystem::solve(const Vec& rhs) const { return svd_.solve(rhs); }
Mat GramSystem::solve(const Mat& rhs) const { return svd_.solve(rhs); }

Vec projector_apply(const ConstraintGeometry& geo, const Vec& x, const Vec& z,
                    double cond_limit) {
  const Mat jac = geo.dg(x);
  const GramSystem gram(gram_matrix(geo, x), cond_limit, "projector");
  const Vec coeff = gram.solve(Vec(jac * geo.mass.apply_inverse(z)));
  return z - jac.transpose() * coeff;
}

bool DerivativeCheckReport::all_ok() const {
  return std::all_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.ok; });
}

double DerivativeCheckReport::max_dg_error() const {
  double e = 0.0;
  for (const auto& s : samples) e = std::max(e, s.dg_error);
  return e;
}

double DerivativeCheckReport::max_d2g_error() const {
  double e = 0.0;
  for (const auto& s : samples) e = std::max(e, s.d2g_error);
  return e;
}

DerivativeCheckReport check_derivatives(const ConstraintGeometry& geo,
                                        const std::vector<Vec>& samples,
                                        double fd_step) {
  if (!(fd_step > 0.0)) throw Error("check_derivatives: fd_step must be > 0");
  DerivativeCheckReport report;
  report.tolerance = 10.0 * fd_step;

  for (const Vec& x : samples) {
    DerivativeCheckReport::Sample entry;
    const Mat jac = geo.dg(x);
    const double jac_scale = jac.cwiseAbs().maxCoeff();

    // dg against central differences of g, column by column.
    for (int j = 0; j < geo.n; ++j) {
      Vec xp = x, xm = x;
      xp(j) += fd_step;
      xm(j) -= fd_step;
      const Vec col = (geo.g(xp) - geo.g(xm)) / (2.0 * fd_step);
      for (int i = 0; i < geo.m; ++i) {
        entry.dg_error = std::max(
            entry.dg_error, relative_error(jac(i, j), col(i), jac_scale));
      }
    }

    // d2g against central differences of dg, one slice per direction.
    for (int j = 0; j < geo.n; ++j) {
      Vec xp = x, xm = x;
      xp(j) += fd_step;
      xm(j) -= fd_step;
      const Mat slice = (geo.dg(xp) - geo.dg(xm)) / (2.0 * fd_step);
      for (int k = 0; k < geo.n; ++k) {
        const Vec exact =
            geo.d2g(x, Vec::Unit(geo.n, j), Vec::Unit(geo.n, k));
        for (int i = 0; i < geo.m; ++i) {
          entry.d2g_error = std::max(
              entry.d2g_error,
              relative_error(exact(i), slice(i, k), jac_scale));
        }
      }
    }

    entry.ok = entry.dg_error <= report.tolerance &&
               entry.d2g_error <= report.tolerance;
    report.samples.push_back(entry);
  }
  return report;
}

namespace {

Vec pseudo_unit(int n, std::uint64_t stream, std::uint64_t index) {
  Vec v(n);
  for (int i = 0; i < n; ++i)
    v(i) = standard_normal(0x5eedu, stream, index * static_cast<std::uint64_t>(n) + i);
  const double nrm = v.norm();
  return nrm > 0.0 ? Vec(v / nrm) : Vec(Vec::Unit(n, 0));
}

double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}

}  // namespace

double estimate_cg(const ConstraintGeometry& geo,
                   const std::vector<Vec>& manifold_samples,
                   const std::vector<Vec>& ambient_samples,
                   double margin) {
  if (manifold_samples.empty())
    throw Error("estimate_cg: need at least one manifold sample");

  double sup = 0.0;

  for (const Vec& x : manifold_samples) {
    const Mat jac = geo.dg(x);
    const Mat minv_grad = geo.mass.apply_inverse(Mat(jac.transpose()));
    sup = std::max(sup, operator_norm(minv_grad));

    const Mat g = gram_matrix(geo, x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0)
      throw SingularGram("estimate_cg: Gram matrix singular at a sample");
    sup = std::max({sup, hi, 1.0 / lo});
  }

  // Bilinear/trilinear norms sampled over random unit directions. The
  // third derivative is probed by finite differences of d2g since the
  // geometry carries no d3g hook.
  constexpr int kDirections = 16;
  constexpr double kFdStep = 1e-5;
  std::uint64_t idx = 0;
  std::vector<Vec> second_sites = ambient_samples.empty() ? manifold_samples
                                                          : ambient_samples;
  for (const Vec& x : second_sites) {
    for (int d = 0; d < kDirections; ++d) {
      const Vec y = pseudo_unit(geo.n, 1, idx++);
      const Vec z = pseudo_unit(geo.n, 2, idx++);
      const Vec w = pseudo_unit(geo.n, 3, idx++);
      sup = std::max(sup, geo.d2g(x, y, z).norm());
      const Vec d3 =
          (geo.d2g(x + kFdStep * w, y, z) - geo.d2g(x - kFdStep * w, y, z)) /
          (2.0 * kFdStep);
      sup = std::max(sup, d3.norm());
    }
  }

  return std::max(1.0, sup * (1.0 + margin));
}

}  // namespace sdae
