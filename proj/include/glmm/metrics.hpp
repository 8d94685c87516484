#pragma once

// Evaluation metrics: RMSE over all tensor entries and spectral angles.

#include "glmm/core.hpp"

#include <algorithm>
#include <cmath>

namespace glmm {

/// sqrt(mean((x - y)^2)) over every entry.
template <typename DerivedX, typename DerivedY>
double rmse(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  detail::require(x.rows() == y.rows() && x.cols() == y.cols(),
                  "rmse: shape mismatch " + detail::dims(x.rows(), x.cols()) + " vs " +
                      detail::dims(y.rows(), y.cols()));
  detail::require(x.size() > 0, "rmse: empty input");
  const double sq = (x.template cast<double>() - y.template cast<double>()).squaredNorm();
  return std::sqrt(sq / double(x.size()));
}

template <typename Scalar, typename Tag>
double rmse(const BandEndmemberTensor<Scalar, Tag>& x, const BandEndmemberTensor<Scalar, Tag>& y) {
  detail::require(x.bands() == y.bands() && x.count() == y.count(), "rmse: tensor shape mismatch");
  return rmse(x.flat(), y.flat());
}

template <typename Scalar>
double rmse(const AbundanceMatrix<Scalar>& x, const AbundanceMatrix<Scalar>& y) {
  return rmse(x.data(), y.data());
}

template <typename Scalar>
double rmse(const HsiCube<Scalar>& x, const HsiCube<Scalar>& y) {
  return rmse(x.data(), y.data());
}

/// Angle between two nonzero vectors in radians, arccos(x'y / (|x| |y|)).
/// Evaluated as 2 atan2(|u - v|, |u + v|) on the unit vectors u, v, which
/// agrees with the arccos form but stays exact for (nearly) parallel inputs,
/// where arccos loses half the digits.
template <typename DerivedX, typename DerivedY>
double spectralAngle(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const Vector<double> u = x.template cast<double>().normalized();
  const Vector<double> v = y.template cast<double>().normalized();
  return 2.0 * std::atan2((u - v).norm(), (u + v).norm());
}

/// Mean per-pixel spectral angle between two cubes.
template <typename Scalar>
double samR(const HsiCube<Scalar>& x, const HsiCube<Scalar>& y) {
  detail::require(x.bands() == y.bands() && x.pixels() == y.pixels(), "samR: shape mismatch");
  double total = 0.0;
  for (Index n = 0; n < x.pixels(); ++n) {
    if (x.pixel(n).norm() == Scalar(0) || y.pixel(n).norm() == Scalar(0))
      throw std::invalid_argument("samR: zero-norm spectrum at pixel " + std::to_string(n));
    total += spectralAngle(x.pixel(n), y.pixel(n));
  }
  return total / double(x.pixels());
}

/// Sum over endmembers of the spectral angle between corresponding columns,
/// averaged over pixels (1/N). With `perEndmember` the sum is also divided by
/// R, giving the mean angle per endmember signature.
template <typename Scalar>
double samM(const PixelEndmemberTensor<Scalar>& x, const PixelEndmemberTensor<Scalar>& y,
            bool perEndmember = false) {
  detail::require(x.bands() == y.bands() && x.count() == y.count() && x.pixels() == y.pixels(),
                  "samM: shape mismatch");
  double total = 0.0;
  for (Index n = 0; n < x.pixels(); ++n) {
    const auto xs = x.slice(n);
    const auto ys = y.slice(n);
    for (Index k = 0; k < x.count(); ++k) {
      if (xs.col(k).norm() == Scalar(0) || ys.col(k).norm() == Scalar(0))
        throw std::invalid_argument("samM: zero-norm endmember " + std::to_string(k) +
                                    " at pixel " + std::to_string(n));
      total += spectralAngle(xs.col(k), ys.col(k));
    }
  }
  total /= double(x.pixels());
  if (perEndmember) total /= double(x.count());
  return total;
}

}  // namespace glmm
