#pragma once

// First-order spatial differences with periodic boundaries.

#include "glmm/core.hpp"
#include "glmm/fft.hpp"

#include <vector>

namespace glmm {

enum class Direction { Horizontal, Vertical };

/// Forward difference x[next] - x[here] along one grid axis, wrapping at the
/// border. Horizontal differences run along a row (next column), vertical
/// ones along a column (next row).
class SpatialGradientOperator {
 public:
  SpatialGradientOperator(GridShape grid, Direction direction)
      : grid_(grid), direction_(direction), next_(grid.pixels()), prev_(grid.pixels()) {
    detail::require(grid.rows > 0 && grid.cols > 0, "SpatialGradientOperator: empty grid");
    for (Index r = 0; r < grid.rows; ++r) {
      for (Index c = 0; c < grid.cols; ++c) {
        const Index n = grid.pixelIndex(r, c);
        if (direction == Direction::Horizontal) {
          next_[n] = grid.pixelIndex(r, (c + 1) % grid.cols);
          prev_[n] = grid.pixelIndex(r, (c + grid.cols - 1) % grid.cols);
        } else {
          next_[n] = grid.pixelIndex((r + 1) % grid.rows, c);
          prev_[n] = grid.pixelIndex((r + grid.rows - 1) % grid.rows, c);
        }
      }
    }
  }

  GridShape grid() const { return grid_; }
  Direction direction() const { return direction_; }

  /// H x for one image stored as an N-vector.
  template <typename Scalar>
  Vector<Scalar> apply(const Vector<Scalar>& image) const {
    checkLength(image.size());
    Vector<Scalar> out(image.size());
    for (Index n = 0; n < image.size(); ++n) out[n] = image[next_[n]] - image[n];
    return out;
  }

  /// H^T y for one image.
  template <typename Scalar>
  Vector<Scalar> adjoint(const Vector<Scalar>& image) const {
    checkLength(image.size());
    Vector<Scalar> out(image.size());
    for (Index n = 0; n < image.size(); ++n) out[n] = image[prev_[n]] - image[n];
    return out;
  }

  /// X H^T: the operator applied to every row of X, columns being pixels.
  template <typename Derived>
  Matrix<typename Derived::Scalar> applyToLayers(const Eigen::MatrixBase<Derived>& x) const {
    checkLength(x.cols());
    Matrix<typename Derived::Scalar> out(x.rows(), x.cols());
    for (Index n = 0; n < x.cols(); ++n) out.col(n) = x.col(next_[n]) - x.col(n);
    return out;
  }

  /// Y H: the adjoint applied to every row of Y.
  template <typename Derived>
  Matrix<typename Derived::Scalar> adjointToLayers(const Eigen::MatrixBase<Derived>& y) const {
    checkLength(y.cols());
    Matrix<typename Derived::Scalar> out(y.rows(), y.cols());
    for (Index n = 0; n < y.cols(); ++n) out.col(n) = y.col(prev_[n]) - y.col(n);
    return out;
  }

  /// The p x q convolution mask h with H x = h (*) x under circular
  /// correlation: -1 at the origin, +1 at the forward neighbour.
  template <typename Scalar = double>
  Matrix<Scalar> mask() const {
    Matrix<Scalar> h = Matrix<Scalar>::Zero(grid_.rows, grid_.cols);
    h(0, 0) -= Scalar(1);
    if (direction_ == Direction::Horizontal)
      h(0, 1 % grid_.cols) += Scalar(1);
    else
      h(1 % grid_.rows, 0) += Scalar(1);
    return h;
  }

 private:
  void checkLength(Index n) const {
    detail::require(n == grid_.pixels(), "SpatialGradientOperator: image has " +
                                             std::to_string(n) + " pixels, grid has " +
                                             std::to_string(grid_.pixels()));
  }

  GridShape grid_;
  Direction direction_;
  std::vector<Index> next_;
  std::vector<Index> prev_;
};

/// |F(h_h)|^2 + |F(h_v)|^2 as a p x q matrix: the DFT eigenvalues of
/// H_h^T H_h + H_v^T H_v.
template <typename Scalar = double>
Matrix<Scalar> gradientGramSpectrum(Index rows, Index cols) {
  detail::require(rows >= 1 && cols >= 1, "gradientGramSpectrum: empty grid");
  const GridShape grid{rows, cols};
  Fft2<Scalar> fft(grid);
  Matrix<Scalar> spectrum = Matrix<Scalar>::Zero(rows, cols);
  for (Direction d : {Direction::Horizontal, Direction::Vertical}) {
    const Matrix<Scalar> h = SpatialGradientOperator(grid, d).mask<Scalar>();
    std::vector<std::complex<Scalar>> buf(grid.pixels());
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) buf[grid.pixelIndex(r, c)] = h(r, c);
    fft.forward(buf);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) spectrum(r, c) += std::norm(buf[grid.pixelIndex(r, c)]);
  }
  return spectrum;
}

/// The spectrum flattened to an N-vector in Fft2 frequency order.
template <typename Scalar = double>
Vector<Scalar> gradientGramEigenvalues(GridShape grid) {
  const Matrix<Scalar> s = gradientGramSpectrum<Scalar>(grid.rows, grid.cols);
  Vector<Scalar> out(grid.pixels());
  for (Index r = 0; r < grid.rows; ++r)
    for (Index c = 0; c < grid.cols; ++c) out[grid.pixelIndex(r, c)] = s(r, c);
  return out;
}

/// Both periodic difference operators for a grid.
struct GradientPair {
  explicit GradientPair(GridShape grid)
      : horizontal(grid, Direction::Horizontal), vertical(grid, Direction::Vertical) {}
  SpatialGradientOperator horizontal;
  SpatialGradientOperator vertical;
};

}  // namespace glmm
