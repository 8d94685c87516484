#pragma once

// Proximal maps used by the abundance solvers.

#include "glmm/core.hpp"

#include <algorithm>
#include <vector>

namespace glmm {

namespace detail {

/// Simplex threshold theta for v, using `sorted` as scratch of v's size.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar simplexThreshold(const Eigen::MatrixBase<Derived>& v, Scalar* sorted) {
  const Index n = v.size();
  for (Index i = 0; i < n; ++i) sorted[i] = v(i);
  std::sort(sorted, sorted + n, std::greater<Scalar>());
  Scalar cumsum = 0, theta = 0;
  for (Index i = 0; i < n; ++i) {
    cumsum += sorted[i];
    const Scalar t = (cumsum - Scalar(1)) / Scalar(i + 1);
    if (sorted[i] - t > Scalar(0)) theta = t;
  }
  return theta;
}

}  // namespace detail

/// Euclidean projection of one vector onto the unit simplex
/// {x : x >= 0, sum(x) = 1} (sort-and-threshold).
template <typename Derived>
Vector<typename Derived::Scalar> projectSimplex(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> scratch(static_cast<std::size_t>(v.size()));
  const Scalar theta = detail::simplexThreshold(v, scratch.data());
  return (v.array() - theta).cwiseMax(Scalar(0)).matrix();
}

/// Column-wise simplex projection.
template <typename Derived>
Matrix<typename Derived::Scalar> projectSimplexColumns(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = x;
  std::vector<Scalar> scratch(static_cast<std::size_t>(x.rows()));
  for (Index n = 0; n < out.cols(); ++n) {
    const Scalar theta = detail::simplexThreshold(out.col(n), scratch.data());
    out.col(n) = (out.col(n).array() - theta).cwiseMax(Scalar(0)).matrix();
  }
  return out;
}

/// Proximal operator of threshold * ||X||_{2,1} with the norm summing the
/// Euclidean norms of the columns: every column x becomes
/// x * max(0, 1 - threshold / ||x||), and zero columns stay zero.
template <typename Derived>
Matrix<typename Derived::Scalar> proxL21(const Eigen::MatrixBase<Derived>& v,
                                         typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  detail::require(threshold >= Scalar(0), "proxL21: threshold must be nonnegative");
  Matrix<Scalar> out(v.rows(), v.cols());
  for (Index e = 0; e < v.cols(); ++e) {
    const Scalar norm = v.col(e).norm();
    const Scalar shrink = norm > threshold ? Scalar(1) - threshold / norm : Scalar(0);
    out.col(e) = shrink * v.col(e);
  }
  return out;
}

/// sum_e ||x_e||_2 over the columns.
template <typename Derived>
typename Derived::Scalar normL21(const Eigen::MatrixBase<Derived>& x) {
  return x.colwise().norm().sum();
}

}  // namespace glmm
