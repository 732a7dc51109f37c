#pragma once

#include <algorithm>
#include <string>

#include <Eigen/Dense>

#include "shallowid/error.hpp"
#include "shallowid/net.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid::numerics {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {
template <typename Derived>
void require_nonempty(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (a.rows() == 0 || a.cols() == 0) throw Error(ErrorKind::input, std::string(what) + ": empty matrix");
}
}  // namespace detail

/// Number of singular values above rank_tol times the largest one.
template <typename Derived>
int rank(const Eigen::MatrixBase<Derived>& a, const ToleranceConfig& tol) {
  detail::require_nonempty(a, "rank");
  using Scalar = typename Derived::Scalar;
  const Eigen::JacobiSVD<Mat<Scalar>> svd(a.derived());
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > Scalar(0))) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol.rank_tol * sv(0)) ++r;
  }
  return r;
}

/// Same contract as rank(), computed by fully pivoted elimination with a relative pivot threshold.
template <typename Derived>
int rank_by_elimination(const Eigen::MatrixBase<Derived>& a, const ToleranceConfig& tol) {
  detail::require_nonempty(a, "rank");
  using Scalar = typename Derived::Scalar;
  Eigen::FullPivLU<Mat<Scalar>> lu(a.derived());
  lu.setThreshold(tol.rank_tol);
  return static_cast<int>(lu.rank());
}

template <typename Scalar>
struct BasicAffineFit {
  BasicHyperplane<Scalar> hyperplane;
  Scalar max_residual{};
};

using AffineFit = BasicAffineFit<double>;

/// Hyperplane through points (one per row) that affinely span a (d-1)-flat.
///
/// The normal is the right singular vector of the centred point matrix with the
/// smallest singular value. Throws Error(input) on too few points and
/// Error(degenerate) when the affine span is not exactly (d-1)-dimensional.
template <typename Derived>
BasicAffineFit<typename Derived::Scalar> affine_fit(const Eigen::MatrixBase<Derived>& points,
                                                    const ToleranceConfig& tol) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonempty(points, "affine_fit");
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < d) {
    throw Error(ErrorKind::input, "affine_fit: need at least " + std::to_string(d) + " points, got " +
                                      std::to_string(n));
  }
  int span = 0;
  if (n > 1) {
    const Mat<Scalar> diffs = points.bottomRows(n - 1).rowwise() - points.row(0);
    const Scalar scale = std::max<Scalar>(Scalar(1), points.cwiseAbs().maxCoeff());
    // Differences that are all negligible at the scale of the points span nothing.
    if (diffs.cwiseAbs().maxCoeff() > tol.zero_tol * scale) span = rank(diffs, tol);
  }
  if (span != d - 1) {
    throw Error(ErrorKind::degenerate, "affine_fit: points span a " + std::to_string(span) +
                                          "-flat, expected " + std::to_string(d - 1));
  }
  const Vec<Scalar> centroid = points.colwise().mean().transpose();
  const Mat<Scalar> centred = points.rowwise() - centroid.transpose();
  const Eigen::JacobiSVD<Mat<Scalar>> svd(centred, Eigen::ComputeFullV);
  const Vec<Scalar> normal = svd.matrixV().col(d - 1);
  BasicAffineFit<Scalar> fit;
  fit.hyperplane = canonical_hyperplane(normal, Scalar(-normal.dot(centroid)), tol);
  fit.max_residual = ((points * fit.hyperplane.a).array() + fit.hyperplane.b).abs().maxCoeff();
  return fit;
}

template <typename Scalar>
struct BasicLeastSquares {
  Vec<Scalar> solution;
  Scalar residual_norm{};
};

using LeastSquares = BasicLeastSquares<double>;

/// Minimum-norm minimiser of ||A z - y||_2.
template <typename DerivedA, typename DerivedY>
BasicLeastSquares<typename DerivedA::Scalar> solve_least_squares(const Eigen::MatrixBase<DerivedA>& a,
                                                                 const Eigen::MatrixBase<DerivedY>& y,
                                                                 const ToleranceConfig& tol) {
  using Scalar = typename DerivedA::Scalar;
  detail::require_nonempty(a, "solve_least_squares");
  if (y.size() != a.rows()) {
    throw Error(ErrorKind::input, "solve_least_squares: right-hand side has " + std::to_string(y.size()) +
                                      " entries, matrix has " + std::to_string(a.rows()) + " rows");
  }
  Eigen::CompleteOrthogonalDecomposition<Mat<Scalar>> cod(a.derived());
  cod.setThreshold(tol.rank_tol);
  BasicLeastSquares<Scalar> out;
  const Vec<Scalar> rhs = y.derived();
  out.solution = cod.solve(rhs);
  out.residual_norm = (a.derived() * out.solution - rhs).norm();
  return out;
}

}  // namespace shallowid::numerics
