#pragma once

// Two-dimensional DFT over a p x q pixel grid and diagonal solves for
// block-circulant-with-circulant-blocks (BCCB) systems.

#include "glmm/core.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace glmm {

/// 2-D DFT of row-major images. Frequency (u, v) lands at index u*q + v.
/// Not thread-safe; holds plan caches and scratch buffers.
template <typename Scalar = double>
class Fft2 {
 public:
  using Complex = std::complex<Scalar>;

  explicit Fft2(GridShape grid)
      : grid_(grid), line_(std::max(grid.rows, grid.cols)), lineOut_(line_.size()) {}

  GridShape grid() const { return grid_; }

  void forward(std::vector<Complex>& x) { transform(x, false); }
  /// Inverse including the 1/N normalization.
  void inverse(std::vector<Complex>& x) { transform(x, true); }

 private:
  void transform(std::vector<Complex>& x, bool inverse) {
    const Index p = grid_.rows, q = grid_.cols;
    detail::require(static_cast<Index>(x.size()) == p * q, "Fft2: buffer size mismatch");
    if (q > 1) {
      for (Index r = 0; r < p; ++r) {
        Complex* row = x.data() + r * q;
        std::copy(row, row + q, line_.begin());
        run(inverse, q);
        std::copy(lineOut_.begin(), lineOut_.begin() + q, row);
      }
    }
    if (p > 1) {
      for (Index c = 0; c < q; ++c) {
        for (Index r = 0; r < p; ++r) line_[r] = x[r * q + c];
        run(inverse, p);
        for (Index r = 0; r < p; ++r) x[r * q + c] = lineOut_[r];
      }
    }
  }

  void run(bool inverse, Index n) {
    if (inverse)
      fft_.inv(lineOut_.data(), line_.data(), n);
    else
      fft_.fwd(lineOut_.data(), line_.data(), n);
  }

  GridShape grid_;
  Eigen::FFT<Scalar> fft_;
  std::vector<Complex> line_;
  std::vector<Complex> lineOut_;
};

/// Solves D x = b for BCCB operators D given by their real, symmetric DFT
/// eigenvalues (one N-vector per right-hand side, in Fft2 frequency layout).
/// Real right-hand sides are processed two at a time through one complex
/// transform pair.
template <typename Scalar = double>
class CirculantSolver {
 public:
  using Complex = std::complex<Scalar>;

  explicit CirculantSolver(GridShape grid) : fft_(grid), buf_(grid.pixels()), a_(grid.pixels()) {
    const Index p = grid.rows, q = grid.cols;
    mirror_.resize(grid.pixels());
    for (Index u = 0; u < p; ++u)
      for (Index v = 0; v < q; ++v) mirror_[u * q + v] = ((p - u) % p) * q + (q - v) % q;
  }

  GridShape grid() const { return fft_.grid(); }

  /// Every row of `layers` (an image over the grid) is replaced by the
  /// solution of the system with eigenvalues `eigen`.
  template <typename Derived, typename EigDerived>
  void solveRows(Eigen::MatrixBase<Derived>& layers, const Eigen::MatrixBase<EigDerived>& eigen) {
    solveRowsWith(layers, [&](Index) -> const EigDerived& { return eigen.derived(); });
  }

  /// As solveRows, with a per-row eigenvalue field supplied by `eigenFor(row)`
  /// (must return something indexable as an N-vector of Scalar).
  template <typename Derived, typename EigenFor>
  void solveRowsWith(Eigen::MatrixBase<Derived>& layers, EigenFor&& eigenFor) {
    detail::require(layers.cols() == grid().pixels(), "CirculantSolver: layer length mismatch");
    solveEach(
        layers.rows(), [&](Index r, Index i) { return layers(r, i); },
        [&](Index r, Index i, Scalar v) { layers(r, i) = v; }, eigenFor);
  }

  /// Column-image variant: every column of `images` is one image.
  template <typename Derived, typename EigenFor>
  void solveColumnsWith(Eigen::MatrixBase<Derived>& images, EigenFor&& eigenFor) {
    detail::require(images.rows() == grid().pixels(), "CirculantSolver: image length mismatch");
    solveEach(
        images.cols(), [&](Index c, Index i) { return images(i, c); },
        [&](Index c, Index i, Scalar v) { images(i, c) = v; }, eigenFor);
  }

 private:
  template <typename Load, typename Store, typename EigenFor>
  void solveEach(Index count, Load&& load, Store&& store, EigenFor&& eigenFor) {
    const Index n = grid().pixels();
    for (Index r = 0; r < count; r += 2) {
      const bool pair = r + 1 < count;
      for (Index i = 0; i < n; ++i) buf_[i] = Complex(load(r, i), pair ? load(r + 1, i) : Scalar(0));
      fft_.forward(buf_);
      const auto& d0 = eigenFor(r);
      if (pair) {
        const auto& d1 = eigenFor(r + 1);
        // Split the packed spectrum into the two real signals' spectra.
        for (Index i = 0; i < n; ++i) {
          const Complex z = buf_[i], zm = std::conj(buf_[mirror_[i]]);
          const Complex fa = (z + zm) * Scalar(0.5);
          const Complex fb = (z - zm) * Complex(0, Scalar(-0.5));
          a_[i] = fa / Scalar(d0(i)) + Complex(0, 1) * (fb / Scalar(d1(i)));
        }
        std::swap(a_, buf_);
      } else {
        for (Index i = 0; i < n; ++i) buf_[i] /= Scalar(d0(i));
      }
      fft_.inverse(buf_);
      for (Index i = 0; i < n; ++i) {
        store(r, i, buf_[i].real());
        if (pair) store(r + 1, i, buf_[i].imag());
      }
    }
  }

  Fft2<Scalar> fft_;
  std::vector<Complex> buf_;
  std::vector<Complex> a_;
  std::vector<Index> mirror_;
};

}  // namespace glmm
