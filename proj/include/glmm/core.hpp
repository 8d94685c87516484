#pragma once

// Core value types for hyperspectral unmixing.
//
// Pixel ordering is row-major lexicographic everywhere: pixel n sits at
// spatial position (row = n / cols, col = n % cols). Band-by-pixel data is
// stored as an L x N matrix whose columns are pixel spectra.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace glmm {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Spatial grid of an image: p rows by q columns.
struct GridShape {
  Index rows = 0;
  Index cols = 0;

  Index pixels() const { return rows * cols; }
  Index pixelIndex(Index row, Index col) const { return row * cols + col; }
  bool operator==(const GridShape&) const = default;
};

namespace detail {

template <typename Derived>
Index firstNonFinite(const Eigen::DenseBase<Derived>& x) {
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (!std::isfinite(static_cast<double>(x(i, j)))) return j * x.rows() + i;
  return -1;
}

inline std::string dims(Index r, Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace detail

/// Observed hyperspectral image R: L bands over a p x q grid.
template <typename Scalar = double>
class HsiCube {
 public:
  HsiCube() = default;

  HsiCube(GridShape grid, Matrix<Scalar> data) : grid_(grid), data_(std::move(data)) {
    detail::require(grid_.rows > 0 && grid_.cols > 0, "HsiCube: grid must be non-empty");
    detail::require(data_.rows() > 0, "HsiCube: at least one band is required");
    detail::require(data_.cols() == grid_.pixels(),
                    "HsiCube: data has " + std::to_string(data_.cols()) +
                        " pixel columns, grid needs " + std::to_string(grid_.pixels()));
    const Index bad = detail::firstNonFinite(data_);
    if (bad >= 0) {
      throw std::invalid_argument("HsiCube: non-finite value at band " +
                                  std::to_string(bad % data_.rows()) + ", pixel " +
                                  std::to_string(bad / data_.rows()));
    }
  }

  static HsiCube zeros(GridShape grid, Index bands) {
    return HsiCube(grid, Matrix<Scalar>::Zero(bands, grid.pixels()));
  }

  GridShape grid() const { return grid_; }
  Index rows() const { return grid_.rows; }
  Index cols() const { return grid_.cols; }
  Index bands() const { return data_.rows(); }
  Index pixels() const { return data_.cols(); }

  const Matrix<Scalar>& data() const { return data_; }
  auto pixel(Index n) const { return data_.col(n); }

 private:
  GridShape grid_;
  Matrix<Scalar> data_;
};

/// Reference endmember signatures M0, one column per material.
template <typename Scalar = double>
class EndmemberMatrix {
 public:
  EndmemberMatrix() = default;

  explicit EndmemberMatrix(Matrix<Scalar> data) : data_(std::move(data)) {
    detail::require(data_.rows() > 0 && data_.cols() > 0, "EndmemberMatrix: empty matrix");
    detail::require(detail::firstNonFinite(data_) < 0, "EndmemberMatrix: non-finite entry");
    detail::require((data_.array() >= Scalar(0)).all(), "EndmemberMatrix: negative entry");
    for (Index k = 0; k < data_.cols(); ++k)
      detail::require((data_.col(k).array() > Scalar(0)).any(),
                      "EndmemberMatrix: endmember " + std::to_string(k) + " is identically zero");
  }

  Index bands() const { return data_.rows(); }
  Index count() const { return data_.cols(); }
  const Matrix<Scalar>& data() const { return data_; }

 private:
  Matrix<Scalar> data_;
};

/// Fractional abundances A (R x N); every column lies on the unit simplex.
template <typename Scalar = double>
class AbundanceMatrix {
 public:
  static constexpr double kNegativeTolerance = 1e-9;
  static constexpr double kSumTolerance = 1e-6;

  AbundanceMatrix() = default;

  explicit AbundanceMatrix(Matrix<Scalar> data) : data_(std::move(data)) {
    detail::require(data_.rows() > 0 && data_.cols() > 0, "AbundanceMatrix: empty matrix");
    const std::string problem = violation(data_);
    if (!problem.empty()) throw std::invalid_argument("AbundanceMatrix: " + problem);
  }

  /// Empty string when `a` satisfies the simplex invariants, otherwise a
  /// description of the first violation.
  template <typename Derived>
  static std::string violation(const Eigen::MatrixBase<Derived>& a) {
    if (detail::firstNonFinite(a) >= 0) return "non-finite entry";
    for (Index n = 0; n < a.cols(); ++n) {
      if (a.col(n).minCoeff() < Scalar(-kNegativeTolerance))
        return "negative abundance at pixel " + std::to_string(n);
      if (std::abs(static_cast<double>(a.col(n).sum()) - 1.0) > kSumTolerance)
        return "pixel " + std::to_string(n) + " does not sum to one";
    }
    return {};
  }

  static AbundanceMatrix uniform(Index count, Index pixels) {
    return AbundanceMatrix(Matrix<Scalar>::Constant(count, pixels, Scalar(1) / Scalar(count)));
  }

  Index count() const { return data_.rows(); }
  Index pixels() const { return data_.cols(); }
  const Matrix<Scalar>& data() const { return data_; }

 private:
  Matrix<Scalar> data_;
};

/// L x R x N nonnegative tensor stored as an (L*R) x N matrix. Column n is the
/// column-major vectorization of the L x R slice for pixel n; row l + L*k is
/// the (l, k) fiber over all pixels.
template <typename Scalar, typename Tag>
class BandEndmemberTensor {
 public:
  BandEndmemberTensor() = default;

  BandEndmemberTensor(Index bands, Index count, Matrix<Scalar> flat)
      : bands_(bands), count_(count), flat_(std::move(flat)) {
    detail::require(bands_ > 0 && count_ > 0, std::string(Tag::name) + ": empty dimensions");
    detail::require(flat_.rows() == bands_ * count_,
                    std::string(Tag::name) + ": flat storage must have L*R rows");
    detail::require(flat_.cols() > 0, std::string(Tag::name) + ": no pixels");
    detail::require(detail::firstNonFinite(flat_) < 0,
                    std::string(Tag::name) + ": non-finite entry");
    detail::require((flat_.array() >= Scalar(0)).all(),
                    std::string(Tag::name) + ": negative entry");
  }

  static BandEndmemberTensor constant(Index bands, Index count, Index pixels, Scalar value) {
    return BandEndmemberTensor(bands, count, Matrix<Scalar>::Constant(bands * count, pixels, value));
  }

  static BandEndmemberTensor ones(Index bands, Index count, Index pixels) {
    return constant(bands, count, pixels, Scalar(1));
  }

  /// Same L x R matrix at every pixel.
  static BandEndmemberTensor replicate(const Matrix<Scalar>& slice, Index pixels) {
    const Eigen::Map<const Vector<Scalar>> v(slice.data(), slice.size());
    return BandEndmemberTensor(slice.rows(), slice.cols(), v.replicate(1, pixels));
  }

  Index bands() const { return bands_; }
  Index count() const { return count_; }
  Index pixels() const { return flat_.cols(); }

  Scalar operator()(Index l, Index k, Index n) const { return flat_(l + bands_ * k, n); }

  /// L x R matrix for pixel n.
  Eigen::Map<const Matrix<Scalar>> slice(Index n) const {
    return Eigen::Map<const Matrix<Scalar>>(flat_.col(n).data(), bands_, count_);
  }

  /// Band l, endmember k, all pixels.
  auto fiber(Index l, Index k) const { return flat_.row(l + bands_ * k); }

  const Matrix<Scalar>& flat() const { return flat_; }

 private:
  Index bands_ = 0;
  Index count_ = 0;
  Matrix<Scalar> flat_;
};

struct ScalingTag {
  static constexpr const char* name = "ScalingTensor";
};
struct PixelEndmemberTag {
  static constexpr const char* name = "PixelEndmemberTensor";
};

/// Per-pixel, per-band, per-endmember scaling factors Psi.
template <typename Scalar = double>
using ScalingTensor = BandEndmemberTensor<Scalar, ScalingTag>;

/// Per-pixel endmember matrices M_n.
template <typename Scalar = double>
using PixelEndmemberTensor = BandEndmemberTensor<Scalar, PixelEndmemberTag>;

/// Entrywise product M0 .* Psi_n for every pixel.
template <typename Scalar>
PixelEndmemberTensor<Scalar> scaleEndmembers(const EndmemberMatrix<Scalar>& m0,
                                             const ScalingTensor<Scalar>& psi) {
  detail::require(m0.bands() == psi.bands() && m0.count() == psi.count(),
                  "scaleEndmembers: M0 is " + detail::dims(m0.bands(), m0.count()) +
                      " but Psi slices are " + detail::dims(psi.bands(), psi.count()));
  const Eigen::Map<const Vector<Scalar>> m0v(m0.data().data(), m0.data().size());
  Matrix<Scalar> flat = psi.flat().array().colwise() * m0v.array();
  return PixelEndmemberTensor<Scalar>(psi.bands(), psi.count(), std::move(flat));
}

}  // namespace glmm
