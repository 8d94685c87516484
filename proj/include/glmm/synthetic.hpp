#pragma once

// Synthetic scenes with known ground truth.
//
// DC0 carries ELMM-type variability (one smooth scalar field per endmember,
// identical across bands). DC1 carries band-dependent variability obtained by
// smoothing white noise with a separable 3-D Gaussian over (band, row, col).
// Reference spectra are smooth sums of positive Gaussians over wavelength.

#include "glmm/core.hpp"
#include "glmm/mixing.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace glmm {

enum class Protocol { DC0, DC1 };

inline std::string protocolName(Protocol p) { return p == Protocol::DC0 ? "dc0" : "dc1"; }

inline Protocol parseProtocol(const std::string& s) {
  if (s == "dc0" || s == "DC0") return Protocol::DC0;
  if (s == "dc1" || s == "DC1") return Protocol::DC1;
  throw std::invalid_argument("unknown protocol '" + s + "' (expected dc0 or dc1)");
}

namespace synth {

/// Independent, reproducible stream seed derived from a scene seed.
inline std::uint64_t streamSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum class Boundary { Periodic, Nearest };

/// Row-major 3-D array of doubles.
struct Field3 {
  std::array<Index, 3> dims{};
  std::vector<double> values;

  Index size() const { return dims[0] * dims[1] * dims[2]; }
  double& at(Index i, Index j, Index k) { return values[(i * dims[1] + j) * dims[2] + k]; }
  double at(Index i, Index j, Index k) const { return values[(i * dims[1] + j) * dims[2] + k]; }
};

inline Field3 whiteNoise(std::array<Index, 3> dims, std::uint64_t seed) {
  Field3 f{dims, {}};
  f.values.resize(static_cast<std::size_t>(f.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : f.values) v = gauss(rng);
  return f;
}

inline std::vector<double> gaussianKernel(double sigma) {
  const Index radius = static_cast<Index>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (Index i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * double(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

/// Gaussian smoothing of one axis in place; sigma <= 0 leaves it untouched.
inline void smoothAxis(Field3& f, int axis, double sigma, Boundary boundary) {
  if (sigma <= 0.0 || f.dims[axis] == 1) return;
  const std::vector<double> kernel = gaussianKernel(sigma);
  const Index radius = static_cast<Index>(kernel.size() / 2);
  const Index len = f.dims[axis];
  std::array<Index, 3> stride{f.dims[1] * f.dims[2], f.dims[2], 1};
  const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
  std::vector<double> line(static_cast<std::size_t>(len)), out(line.size());
  for (Index i = 0; i < f.dims[a1]; ++i) {
    for (Index j = 0; j < f.dims[a2]; ++j) {
      const Index base = i * stride[a1] + j * stride[a2];
      for (Index t = 0; t < len; ++t) line[t] = f.values[base + t * stride[axis]];
      for (Index t = 0; t < len; ++t) {
        double acc = 0.0;
        for (Index d = -radius; d <= radius; ++d) {
          Index s = t + d;
          if (boundary == Boundary::Periodic)
            s = ((s % len) + len) % len;
          else
            s = std::clamp<Index>(s, 0, len - 1);
          acc += kernel[static_cast<std::size_t>(d + radius)] * line[s];
        }
        out[t] = acc;
      }
      for (Index t = 0; t < len; ++t) f.values[base + t * stride[axis]] = out[t];
    }
  }
}

/// Smooth periodic 2-D random field over the grid, one value per pixel.
inline std::vector<double> smoothField2(GridShape grid, double sigma, std::uint64_t seed) {
  Field3 f = whiteNoise({1, grid.rows, grid.cols}, seed);
  smoothAxis(f, 1, sigma, Boundary::Periodic);
  smoothAxis(f, 2, sigma, Boundary::Periodic);
  return f.values;
}

}  // namespace synth

struct SynthParams {
  double abundanceSigma = 4.0;   // spatial std-dev of abundance fields, pixels
  double dc0Sigma = 4.0;         // spatial std-dev of the DC0 scalar fields
  double dc0Min = 0.75;
  double dc0Max = 1.25;
  double dc1Sigma = 2.0;         // std-dev on each of the three DC1 axes
  double dc1Amplitude = 0.25;
  double maxCondition = 50.0;    // resample M0 until cond(M0) is below this
};

/// Smooth random abundance maps on the simplex: filtered white noise per
/// endmember, shifted to be nonnegative, then normalized per pixel.
template <typename Scalar = double>
AbundanceMatrix<Scalar> genAbundances(GridShape grid, Index count, std::uint64_t seed,
                                      double sigma = SynthParams{}.abundanceSigma) {
  detail::require(grid.rows >= 1 && grid.cols >= 1 && grid.pixels() >= 2,
                  "genAbundances: degenerate grid");
  detail::require(count >= 2, "genAbundances: need at least two endmembers");
  Matrix<double> a(count, grid.pixels());
  for (Index k = 0; k < count; ++k) {
    const std::vector<double> f = synth::smoothField2(grid, sigma, synth::streamSeed(seed, k));
    const double lo = *std::min_element(f.begin(), f.end());
    for (Index n = 0; n < grid.pixels(); ++n) a(k, n) = f[n] - lo;
  }
  for (Index n = 0; n < grid.pixels(); ++n) {
    const double s = a.col(n).sum();
    if (s > 0.0)
      a.col(n) /= s;
    else
      a.col(n).setConstant(1.0 / double(count));
  }
  return AbundanceMatrix<Scalar>(a.cast<Scalar>());
}

/// ELMM-type scaling: one smooth spatial field per endmember mapped onto
/// [lo, hi], replicated over all bands.
template <typename Scalar = double>
ScalingTensor<Scalar> genScalingDc0(GridShape grid, Index bands, Index count, std::uint64_t seed,
                                    double lo = SynthParams{}.dc0Min,
                                    double hi = SynthParams{}.dc0Max,
                                    double sigma = SynthParams{}.dc0Sigma) {
  detail::require(lo > 0.0 && lo <= hi, "genScalingDc0: need 0 < min <= max");
  detail::require(bands >= 1 && count >= 1 && grid.pixels() >= 1, "genScalingDc0: empty dims");
  Matrix<Scalar> flat(bands * count, grid.pixels());
  for (Index k = 0; k < count; ++k) {
    const std::vector<double> f = synth::smoothField2(grid, sigma, synth::streamSeed(seed, k));
    const auto [mn, mx] = std::minmax_element(f.begin(), f.end());
    const double span = *mx - *mn;
    for (Index n = 0; n < grid.pixels(); ++n) {
      const double u = span > 0.0 ? (f[n] - *mn) / span : 0.5;
      const double v = std::clamp(lo + (hi - lo) * u, lo, hi);
      flat.block(k * bands, n, bands, 1).setConstant(static_cast<Scalar>(v));
    }
  }
  return ScalingTensor<Scalar>(bands, count, std::move(flat));
}

/// Band-dependent scaling: per endmember, white noise over (band, row, col)
/// smoothed by a separable 3-D Gaussian, rescaled to mean one with maximum
/// excursion `amplitude`, clamped at zero.
template <typename Scalar = double>
ScalingTensor<Scalar> genScalingDc1(GridShape grid, Index bands, Index count, std::uint64_t seed,
                                    double amplitude = SynthParams{}.dc1Amplitude,
                                    double sigma = SynthParams{}.dc1Sigma) {
  detail::require(amplitude > 0.0 && std::isfinite(amplitude),
                  "genScalingDc1: amplitude must be positive");
  detail::require(bands >= 1 && count >= 1 && grid.pixels() >= 1, "genScalingDc1: empty dims");
  Matrix<Scalar> flat(bands * count, grid.pixels());
  for (Index k = 0; k < count; ++k) {
    synth::Field3 f = synth::whiteNoise({bands, grid.rows, grid.cols}, synth::streamSeed(seed, k));
    synth::smoothAxis(f, 0, sigma, synth::Boundary::Nearest);
    synth::smoothAxis(f, 1, sigma, synth::Boundary::Periodic);
    synth::smoothAxis(f, 2, sigma, synth::Boundary::Periodic);
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= double(f.size());
    double peak = 0.0;
    for (double v : f.values) peak = std::max(peak, std::abs(v - mean));
    for (Index l = 0; l < bands; ++l) {
      for (Index n = 0; n < grid.pixels(); ++n) {
        const double g = peak > 0.0 ? (f.values[l * grid.pixels() + n] - mean) / peak : 0.0;
        flat(l + bands * k, n) = static_cast<Scalar>(std::max(0.0, 1.0 + amplitude * g));
      }
    }
  }
  return ScalingTensor<Scalar>(bands, count, std::move(flat));
}

/// 2-norm condition number (ratio of extreme singular values).
template <typename Scalar>
double conditionNumber(const Matrix<Scalar>& m) {
  Eigen::JacobiSVD<Matrix<double>> svd(m.template cast<double>());
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] == 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

/// Smooth positive reference spectra over 0.4-2.5 um: a baseline plus three
/// Gaussian absorption/reflection bumps per endmember. Draws are repeated
/// from the same stream until cond(M0) < maxCondition (at most 1000 tries).
template <typename Scalar = double>
EndmemberMatrix<Scalar> genEndmembers(Index bands, Index count, std::uint64_t seed,
                                      double maxCondition = SynthParams{}.maxCondition) {
  detail::require(bands >= 1 && count >= 1, "genEndmembers: empty dims");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix<double> m(bands, count);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (Index k = 0; k < count; ++k) {
      const double base = 0.05 + 0.15 * unit(rng);
      const double slope = -0.05 + 0.1 * unit(rng);
      double bumps[3][3];
      for (auto& b : bumps) {
        b[0] = 0.1 + 0.4 * unit(rng);   // height
        b[1] = 0.4 + 2.1 * unit(rng);   // centre, um
        b[2] = 0.1 + 0.3 * unit(rng);   // width, um
      }
      for (Index l = 0; l < bands; ++l) {
        const double wl = bands == 1 ? 1.0 : 0.4 + 2.1 * double(l) / double(bands - 1);
        double v = base + slope * (wl - 0.4);
        for (const auto& b : bumps) v += b[0] * std::exp(-0.5 * std::pow((wl - b[1]) / b[2], 2));
        m(l, k) = std::max(v, 0.01);
      }
    }
    if (bands < count || conditionNumber(m) < maxCondition) break;
  }
  return EndmemberMatrix<Scalar>(m.cast<Scalar>());
}

template <typename Scalar = double>
struct SyntheticScene {
  Protocol protocol = Protocol::DC0;
  std::uint64_t seed = 0;
  double snrDb = 30.0;
  HsiCube<Scalar> cube;
  HsiCube<Scalar> cubeClean;
  AbundanceMatrix<Scalar> truthA;
  ScalingTensor<Scalar> truthPsi;
  PixelEndmemberTensor<Scalar> truthM;
  EndmemberMatrix<Scalar> m0;

  GridShape grid() const { return cube.grid(); }
};

template <typename Scalar = double>
SyntheticScene<Scalar> synthScene(Protocol protocol, GridShape grid, Index bands, Index count,
                                  double snrDb, std::uint64_t seed,
                                  const SynthParams& params = {}) {
  SyntheticScene<Scalar> s;
  s.protocol = protocol;
  s.seed = seed;
  s.snrDb = snrDb;
  s.m0 = genEndmembers<Scalar>(bands, count, synth::streamSeed(seed, 100), params.maxCondition);
  s.truthA = genAbundances<Scalar>(grid, count, synth::streamSeed(seed, 200), params.abundanceSigma);
  if (protocol == Protocol::DC0)
    s.truthPsi = genScalingDc0<Scalar>(grid, bands, count, synth::streamSeed(seed, 300),
                                       params.dc0Min, params.dc0Max, params.dc0Sigma);
  else
    s.truthPsi = genScalingDc1<Scalar>(grid, bands, count, synth::streamSeed(seed, 300),
                                       params.dc1Amplitude, params.dc1Sigma);
  s.truthM = scaleEndmembers(s.m0, s.truthPsi);
  s.cubeClean = glmmForward(s.m0, s.truthPsi, s.truthA, grid);
  s.cube = addNoise(s.cubeClean, NoiseSpec{snrDb, synth::streamSeed(seed, 400)});
  return s;
}

}  // namespace glmm
