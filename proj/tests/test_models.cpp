#include "glmm/mixing.hpp"
#include "glmm/synthetic.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <chrono>

using namespace glmm;
using oracle::Mat;
using oracle::Vec;

namespace {

/// Lag-1 autocorrelation of a sequence of (value, neighbour) pairs.
double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double spatialLag1(const Eigen::RowVectorXd& image, GridShape g) {
  std::vector<double> x, y;
  for (Index i = 0; i < g.rows; ++i)
    for (Index j = 0; j + 1 < g.cols; ++j) {
      x.push_back(image[g.pixelIndex(i, j)]);
      y.push_back(image[g.pixelIndex(i, j + 1)]);
    }
  return correlation(x, y);
}

}  // namespace

TEST_SUITE("mixing") {
  TEST_CASE("pure pixels and convex mixtures") {
    const EndmemberMatrix<double> m0(oracle::uniform(6, 2, 0.1, 1.0));
    Mat a(2, 3);
    a << 1, 0, 0.5, 0, 1, 0.5;
    const auto r = lmmForward(m0, AbundanceMatrix<double>(a), GridShape{1, 3});
    CHECK(r.pixel(0) == m0.data().col(0));
    CHECK(r.pixel(1) == m0.data().col(1));
    CHECK((r.pixel(2) - 0.5 * (m0.data().col(0) + m0.data().col(1))).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("LMM equals a direct matrix product") {
    const EndmemberMatrix<double> m0(oracle::uniform(9, 3, 0.1, 1.0));
    const AbundanceMatrix<double> a(oracle::simplexColumns(3, 12));
    const auto r = lmmForward(m0, a, GridShape{3, 4});
    for (Index n = 0; n < 12; ++n)
      for (Index l = 0; l < 9; ++l) {
        double s = 0;
        for (Index k = 0; k < 3; ++k) s += m0.data()(l, k) * a.data()(k, n);
        CHECK(r.data()(l, n) == doctest::Approx(s).epsilon(1e-14));
      }
  }

  TEST_CASE("ELMM special cases") {
    const EndmemberMatrix<double> m0(oracle::uniform(5, 3, 0.1, 1.0));
    const AbundanceMatrix<double> a(oracle::simplexColumns(3, 4));
    const GridShape g{2, 2};
    CHECK((elmmForward(m0, Mat::Ones(3, 4), a, g).data() - lmmForward(m0, a, g).data())
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    const EndmemberMatrix<double> single(oracle::uniform(5, 1, 0.1, 1.0));
    const auto doubled = elmmForward(single, Mat::Constant(1, 1, 2.0),
                                     AbundanceMatrix<double>(Mat::Ones(1, 1)), GridShape{1, 1});
    CHECK(doubled.pixel(0) == 2.0 * single.data().col(0));
    CHECK_THROWS_AS(elmmForward(m0, Mat::Constant(3, 4, -1.0), a, g), std::invalid_argument);
  }

  TEST_CASE("GLMM nests ELMM and LMM") {
    const Index nb = 7, nr = 3, np = 6;
    const GridShape g{2, 3};
    const EndmemberMatrix<double> m0(oracle::uniform(nb, nr, 0.1, 1.0));
    const AbundanceMatrix<double> a(oracle::simplexColumns(nr, np));
    const Mat diag = oracle::uniform(nr, np, 0.5, 1.5);
    Mat flat(nb * nr, np);
    for (Index n = 0; n < np; ++n)
      for (Index k = 0; k < nr; ++k) flat.block(k * nb, n, nb, 1).setConstant(diag(k, n));
    const ScalingTensor<double> psi(nb, nr, flat);
    CHECK((glmmForward(m0, psi, a, g).data() - elmmForward(m0, diag, a, g).data())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((glmmForward(m0, ScalingTensor<double>::ones(nb, nr, np), a, g).data() -
           lmmForward(m0, a, g).data())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  TEST_CASE("GLMM annihilated band and triple-loop oracle") {
    const Index nb = 5, nr = 2, np = 4;
    const GridShape g{2, 2};
    const EndmemberMatrix<double> m0(oracle::uniform(nb, nr, 0.1, 1.0));
    const AbundanceMatrix<double> a(oracle::simplexColumns(nr, np));
    Mat flat = oracle::uniform(nb * nr, np, 0.5, 1.5);
    for (Index k = 0; k < nr; ++k) flat(2 + nb * k, 1) = 0.0;
    const ScalingTensor<double> psi(nb, nr, flat);
    const auto r = glmmForward(m0, psi, a, g);
    CHECK(r.data()(2, 1) == 0.0);
    for (Index n = 0; n < np; ++n)
      for (Index l = 0; l < nb; ++l) {
        double s = 0;
        for (Index k = 0; k < nr; ++k) s += m0.data()(l, k) * psi(l, k, n) * a.data()(k, n);
        CHECK(r.data()(l, n) == doctest::Approx(s).epsilon(1e-14));
      }
    CHECK((reconstruct(scaleEndmembers(m0, psi), a, g).data() - r.data()).cwiseAbs().maxCoeff() <
          1e-15);
  }

  TEST_CASE("noise: sentinel, determinism, measured SNR") {
    const auto a = genAbundances<double>(GridShape{50, 50}, 3, 5);
    const auto m0 = genEndmembers<double>(100, 3, 6);
    const auto clean = lmmForward(m0, a, GridShape{50, 50});
    CHECK(addNoise(clean, NoiseSpec::noiseless()).data() == clean.data());
    const auto n1 = addNoise(clean, NoiseSpec{30.0, 9});
    const auto n2 = addNoise(clean, NoiseSpec{30.0, 9});
    CHECK(n1.data() == n2.data());
    CHECK(addNoise(clean, NoiseSpec{30.0, 10}).data() != n1.data());
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const double snr = measuredSnrDb(clean, addNoise(clean, NoiseSpec{30.0, seed}));
      CHECK(snr >= 29.5);
      CHECK(snr <= 30.5);
    }
    CHECK(std::isinf(measuredSnrDb(clean, clean)));
    CHECK_THROWS_AS(addNoise(clean, NoiseSpec{std::nan(""), 1}), std::invalid_argument);
  }
}

TEST_SUITE("synthetic") {
  const GridShape grid{50, 50};

  TEST_CASE("stream seeds are distinct and stable") {
    CHECK(synth::streamSeed(1, 100) == synth::streamSeed(1, 100));
    CHECK(synth::streamSeed(1, 100) != synth::streamSeed(1, 200));
    CHECK(synth::streamSeed(1, 100) != synth::streamSeed(2, 100));
  }

  TEST_CASE("gaussian kernel is normalized and symmetric") {
    const auto k = synth::gaussianKernel(2.0);
    double s = 0;
    for (double v : k) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
  }

  TEST_CASE("abundances are on the simplex, smooth, and seeded") {
    const auto a = genAbundances<double>(grid, 3, 11);
    CHECK((a.data().array() >= 0).all());
    CHECK((a.data().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    for (Index k = 0; k < 3; ++k) CHECK(spatialLag1(a.data().row(k), grid) > 0.5);
    CHECK(genAbundances<double>(grid, 3, 11).data() == a.data());
    CHECK(genAbundances<double>(grid, 3, 12).data() != a.data());
  }

  TEST_CASE("DC0 scaling is band-constant and within range") {
    const auto psi = genScalingDc0<double>(grid, 20, 3, 4);
    for (Index n = 0; n < grid.pixels(); n += 37)
      for (Index k = 0; k < 3; ++k)
        for (Index l = 1; l < 20; ++l) CHECK(psi(l, k, n) == psi(0, k, n));
    CHECK(psi.flat().minCoeff() >= 0.75);
    CHECK(psi.flat().maxCoeff() <= 1.25);
    const auto ones = genScalingDc0<double>(grid, 4, 2, 4, 1.0, 1.0);
    CHECK(ones.flat().isOnes(0.0));
  }

  TEST_CASE("DC1 scaling varies smoothly over bands and space") {
    const Index nb = 40;
    const auto psi = genScalingDc1<double>(grid, nb, 3, 8);
    CHECK(psi.flat().minCoeff() >= 0.0);
    double bandDiff = 0;
    std::vector<double> x, y;
    for (Index k = 0; k < 3; ++k)
      for (Index n = 0; n < grid.pixels(); ++n)
        for (Index l = 0; l + 1 < nb; ++l) {
          bandDiff = std::max(bandDiff, std::abs(psi(l + 1, k, n) - psi(l, k, n)));
          x.push_back(psi(l, k, n));
          y.push_back(psi(l + 1, k, n));
        }
    CHECK(bandDiff > 1e-3);
    CHECK(correlation(x, y) > 0.5);
    CHECK(spatialLag1(psi.fiber(5, 1), grid) > 0.5);
    const auto flat = genScalingDc1<double>(grid, 10, 2, 8, 1e-12);
    CHECK((flat.flat().array() - 1.0).abs().maxCoeff() < 1e-9);
  }

  TEST_CASE("endmembers are positive and well conditioned") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto m0 = genEndmembers<double>(100, 3, seed);
      CHECK((m0.data().array() > 0).all());
      CHECK(conditionNumber(m0.data()) < 50.0);
    }
  }

  TEST_CASE("scene is consistent with its truth") {
    const auto s = synthScene<double>(Protocol::DC0, GridShape{12, 10}, 15, 3, 30.0, 3);
    for (Index n = 0; n < s.truthPsi.pixels(); ++n)
      for (Index k = 0; k < 3; ++k)
        for (Index l = 1; l < 15; ++l) CHECK(s.truthPsi(l, k, n) == s.truthPsi(0, k, n));
    CHECK(s.cubeClean.data() == glmmForward(s.m0, s.truthPsi, s.truthA, s.grid()).data());
    const auto t = synthScene<double>(Protocol::DC0, GridShape{12, 10}, 15, 3, 30.0, 3);
    CHECK(t.cube.data() == s.cube.data());
    CHECK(parseProtocol("DC1") == Protocol::DC1);
    CHECK_THROWS_AS(parseProtocol("dc2"), std::invalid_argument);
  }

  TEST_CASE("full-size DC1 scene generates quickly") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = synthScene<double>(Protocol::DC1, grid, 100, 3, 30.0, 7);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
    CHECK(s.cube.pixels() == 2500);
  }
}
