#include "glmm/metrics.hpp"
#include "glmm/least_squares.hpp"
#include "glmm/report.hpp"
#include "glmm/synthetic.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace glmm;
using oracle::Mat;
using oracle::Vec;

TEST_SUITE("metrics") {
  TEST_CASE("rmse identities and loop oracle") {
    const Mat x = oracle::gaussian(7, 5);
    CHECK(rmse(x, x) == 0.0);
    CHECK(rmse(Mat::Zero(3, 4), Mat::Ones(3, 4)) == 1.0);
    const Mat y = oracle::gaussian(7, 5);
    double s = 0;
    for (Index j = 0; j < 5; ++j)
      for (Index i = 0; i < 7; ++i) s += (x(i, j) - y(i, j)) * (x(i, j) - y(i, j));
    CHECK(rmse(x, y) == doctest::Approx(std::sqrt(s / 35.0)).epsilon(1e-12));
    CHECK(rmse(Mat(3.0 * x), Mat(3.0 * y)) == doctest::Approx(3.0 * rmse(x, y)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse(x, Mat::Zero(5, 7)), std::invalid_argument);
  }

  TEST_CASE("samR identities and loop oracle") {
    const GridShape g{3, 4};
    const HsiCube<double> x(g, oracle::uniform(6, 12, 0.1, 1.0));
    CHECK(samR(x, x) == 0.0);
    CHECK(samR(x, HsiCube<double>(g, 2.0 * x.data())) < 1e-15);
    Mat d = x.data();
    const Vec s = oracle::uniform(12, 1, 0.2, 5.0);
    for (Index n = 0; n < 12; ++n) d.col(n) *= s[n];
    CHECK(samR(x, HsiCube<double>(g, d)) < 1e-15);
    Mat e1 = Mat::Zero(2, 1), e2 = Mat::Zero(2, 1);
    e1(0, 0) = 1;
    e2(1, 0) = 1;
    const GridShape one{1, 1};
    CHECK(samR(HsiCube<double>(one, e1), HsiCube<double>(one, e2)) ==
          doctest::Approx(M_PI / 2).epsilon(1e-15));
    const HsiCube<double> y(g, oracle::uniform(6, 12, 0.1, 1.0));
    double want = 0;
    for (Index n = 0; n < 12; ++n) want += oracle::angle(x.pixel(n), y.pixel(n));
    CHECK(std::abs(samR(x, y) - want / 12) < 1e-12);
    Mat z = x.data();
    z.col(5).setZero();
    try {
      samR(x, HsiCube<double>(g, z));
      FAIL("expected a failure");
    } catch (const std::invalid_argument& err) {
      CHECK(std::string(err.what()).find("pixel 5") != std::string::npos);
    }
  }

  TEST_CASE("samM identities and loop oracle") {
    const Index nb = 5, nr = 3, np = 8;
    const PixelEndmemberTensor<double> x(nb, nr, oracle::uniform(nb * nr, np, 0.1, 1.0));
    const PixelEndmemberTensor<double> y(nb, nr, oracle::uniform(nb * nr, np, 0.1, 1.0));
    CHECK(samM(x, x) == 0.0);
    double want = 0;
    for (Index n = 0; n < np; ++n)
      for (Index k = 0; k < nr; ++k)
        want += oracle::angle(x.slice(n).col(k), y.slice(n).col(k));
    CHECK(std::abs(samM(x, y) - want / np) < 1e-12);
    CHECK(std::abs(samM(x, y, true) - want / (np * nr)) < 1e-12);
    Mat a = Mat::Zero(4, 1), b = Mat::Zero(4, 1);
    a(0, 0) = 1;  // column 0 = e1, column 1 = e2
    a(3, 0) = 1;
    b(1, 0) = 1;
    b(2, 0) = 1;
    CHECK(samM(PixelEndmemberTensor<double>(2, 2, a), PixelEndmemberTensor<double>(2, 2, b)) ==
          doctest::Approx(M_PI).epsilon(1e-15));
  }

  TEST_CASE("spectral angle agrees with arccos away from parallel") {
    for (int t = 0; t < 100; ++t) {
      const Vec x = oracle::gaussian(6, 1), y = oracle::gaussian(6, 1);
      CHECK(std::abs(spectralAngle(x, y) - oracle::angle(x, y)) < 1e-12);
    }
  }
}

TEST_SUITE("report") {
  const auto scene = synthScene<double>(Protocol::DC1, GridShape{6, 5}, 10, 3, 30.0, 2);

  TEST_CASE("truth row: zero parameter errors, residual equals the noise") {
    const auto row = evaluateEstimate(scene, truthEstimate(scene));
    CHECK(row.rmseA == 0.0);
    CHECK(*row.rmseM == 0.0);
    CHECK(*row.samM == 0.0);
    CHECK(row.rmseR == doctest::Approx(rmse(scene.cube, scene.cubeClean)).epsilon(1e-12));
    CHECK(row.samR == doctest::Approx(samR(scene.cube, scene.cubeClean)).epsilon(1e-12));
  }

  TEST_CASE("FCLS has no endmember metrics; SCLS does") {
    const auto f = fclsEstimate("FCLS", scene.m0, fcls(scene.cube, scene.m0), scene.grid());
    const auto row = evaluateEstimate(scene, f);
    CHECK_FALSE(row.rmseM.has_value());
    CHECK_FALSE(row.samM.has_value());
    const auto s = sclsEstimate("SCLS", scene.m0, scls(scene.cube, scene.m0), scene.grid());
    const auto srow = evaluateEstimate(scene, s, true);
    CHECK(srow.rmseM.has_value());
    CHECK(*srow.samMPerEndmember == doctest::Approx(*srow.samM / 3).epsilon(1e-14));
  }

  TEST_CASE("CSV round trip is exact") {
    const auto f = fclsEstimate("FCLS", scene.m0, fcls(scene.cube, scene.m0), scene.grid());
    const auto s = sclsEstimate("SCLS", scene.m0, scls(scene.cube, scene.m0), scene.grid());
    const auto report = buildReport(scene, {truthEstimate(scene), f, s}, true);
    CHECK(report.rows.size() == 3);
    CHECK(reportFromCsv(reportToCsv(report)) == report);
    CHECK_THROWS(reportFromCsv("method,RMSE_A\nx,1\n"));
  }
}
