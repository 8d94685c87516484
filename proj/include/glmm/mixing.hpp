#pragma once

// Forward models: LMM, ELMM and GLMM, and SNR-controlled white Gaussian noise.

#include "glmm/core.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <type_traits>

namespace glmm {

namespace detail {

template <typename Scalar>
void checkMixingDims(const EndmemberMatrix<Scalar>& m0, const AbundanceMatrix<Scalar>& a,
                     GridShape grid) {
  require(m0.count() == a.count(), "mixing: M0 has " + std::to_string(m0.count()) +
                                       " endmembers, A has " + std::to_string(a.count()));
  require(grid.pixels() == a.pixels(), "mixing: grid has " + std::to_string(grid.pixels()) +
                                           " pixels, A has " + std::to_string(a.pixels()));
}

}  // namespace detail

/// r_n = M0 alpha_n.
template <typename Scalar>
HsiCube<Scalar> lmmForward(const EndmemberMatrix<Scalar>& m0, const AbundanceMatrix<Scalar>& a,
                           GridShape grid) {
  detail::checkMixingDims(m0, a, grid);
  return HsiCube<Scalar>(grid, m0.data() * a.data());
}

/// r_n = M0 diag(psi_n) alpha_n with psi_n the n-th column of `psiDiag` (R x N).
template <typename Scalar>
HsiCube<Scalar> elmmForward(const EndmemberMatrix<Scalar>& m0,
                            const Matrix<std::type_identity_t<Scalar>>& psiDiag,
                            const AbundanceMatrix<Scalar>& a, GridShape grid) {
  detail::checkMixingDims(m0, a, grid);
  detail::require(psiDiag.rows() == a.count() && psiDiag.cols() == a.pixels(),
                  "elmmForward: scaling must be R x N");
  detail::require((psiDiag.array() >= Scalar(0)).all(), "elmmForward: negative scaling factor");
  const Matrix<Scalar> scaled = psiDiag.cwiseProduct(a.data());
  return HsiCube<Scalar>(grid, m0.data() * scaled);
}

/// r_n = (M0 .* Psi_n) alpha_n.
template <typename Scalar>
HsiCube<Scalar> glmmForward(const EndmemberMatrix<Scalar>& m0, const ScalingTensor<Scalar>& psi,
                            const AbundanceMatrix<Scalar>& a, GridShape grid) {
  detail::checkMixingDims(m0, a, grid);
  detail::require(psi.bands() == m0.bands() && psi.count() == m0.count() &&
                      psi.pixels() == a.pixels(),
                  "glmmForward: Psi dimensions do not match M0 and A");
  const Index nb = m0.bands();
  Matrix<Scalar> out(nb, a.pixels());
  for (Index n = 0; n < a.pixels(); ++n)
    out.col(n).noalias() = m0.data().cwiseProduct(psi.slice(n)) * a.data().col(n);
  return HsiCube<Scalar>(grid, std::move(out));
}

/// r_n = M_n alpha_n for explicit per-pixel endmember matrices.
template <typename Scalar>
HsiCube<Scalar> reconstruct(const PixelEndmemberTensor<Scalar>& m, const AbundanceMatrix<Scalar>& a,
                            GridShape grid) {
  detail::require(m.count() == a.count() && m.pixels() == a.pixels() &&
                      grid.pixels() == a.pixels(),
                  "reconstruct: dimension mismatch");
  Matrix<Scalar> out(m.bands(), a.pixels());
  for (Index n = 0; n < a.pixels(); ++n) out.col(n).noalias() = m.slice(n) * a.data().col(n);
  return HsiCube<Scalar>(grid, std::move(out));
}

struct NoiseSpec {
  /// Target 10 log10(|signal|^2 / |noise|^2). +infinity disables noise.
  double snrDb = 30.0;
  std::uint64_t seed = 0;

  static NoiseSpec noiseless() { return {std::numeric_limits<double>::infinity(), 0}; }
};

/// Empirical SNR in dB between a clean cube and its noisy counterpart.
template <typename Scalar>
double measuredSnrDb(const HsiCube<Scalar>& clean, const HsiCube<Scalar>& noisy) {
  detail::require(clean.data().rows() == noisy.data().rows() &&
                      clean.data().cols() == noisy.data().cols(),
                  "measuredSnrDb: shape mismatch");
  const double signal = clean.data().template cast<double>().squaredNorm();
  const double noise = (noisy.data().template cast<double>() - clean.data().template cast<double>())
                           .squaredNorm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

/// Adds i.i.d. zero-mean Gaussian noise whose variance gives the requested
/// SNR in expectation. Deterministic in the seed; samples are drawn in
/// storage order (band fastest, then pixel).
template <typename Scalar>
HsiCube<Scalar> addNoise(const HsiCube<Scalar>& cube, const NoiseSpec& spec) {
  detail::require(!std::isnan(spec.snrDb), "addNoise: SNR must not be NaN");
  if (std::isinf(spec.snrDb) && spec.snrDb > 0) return cube;
  detail::require(std::isfinite(spec.snrDb), "addNoise: SNR must be finite or +inf");
  const double count = static_cast<double>(cube.data().size());
  const double power = cube.data().template cast<double>().squaredNorm() / count;
  detail::require(power > 0.0, "addNoise: cube has zero energy");
  const double sigma = std::sqrt(power / std::pow(10.0, spec.snrDb / 10.0));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  Matrix<Scalar> noisy = cube.data();
  for (Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += static_cast<Scalar>(gauss(rng));
  return HsiCube<Scalar>(cube.grid(), std::move(noisy));
}

}  // namespace glmm
