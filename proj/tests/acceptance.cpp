// Acceptance checks. Prints one "criterion N: PASS|FAIL ..." line per check
// and exits nonzero if any fails. Optional arguments select criteria by
// number, e.g. `glmm_acceptance 4 5 6`.

#include "cli.hpp"

#include "glmm/grid_search.hpp"
#include "glmm/io.hpp"
#include "glmm/least_squares.hpp"
#include "glmm/metrics.hpp"
#include "glmm/mixing.hpp"
#include "glmm/solver.hpp"
#include "glmm/synthetic.hpp"

#include "oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace glmm;
using oracle::Mat;
using oracle::Vec;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1-3: tuned RMSE_A ordering on generated scenes

struct ProtocolSummary {
  double fcls = 0, scls = 0, glmm = 0, elmm = 0;
  double glmmR = 0, elmmR = 0;
  double seconds = 0;
};

ProtocolSummary runProtocol(Protocol protocol) {
  const auto t0 = Clock::now();
  ProtocolSummary s;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto scene =
        synthScene<double>(protocol, GridShape{50, 50}, 100, 3, 30.0, std::uint64_t(seed));
    const double f = rmse(fcls(scene.cube, scene.m0), scene.truthA);
    const double c = rmse(scls(scene.cube, scene.m0).abundances, scene.truthA);
    GlmmConfig full, band;
    band.psiMode = PsiMode::BandConstant;
    const auto g = gridSearch(scene, GridSpec{}, full, 0).rows.front();
    const auto e = gridSearch(scene, GridSpec{}, band, 0).rows.front();
    std::cout << "  " << protocolName(protocol) << " seed " << seed << ": fcls " << fmt("%.4f", f)
              << " scls " << fmt("%.4f", c) << " glmm " << fmt("%.4f", g.metrics.rmseA)
              << " (rmse_r " << fmt("%.5f", g.metrics.rmseR) << ") elmm "
              << fmt("%.4f", e.metrics.rmseA) << " (rmse_r " << fmt("%.5f", e.metrics.rmseR)
              << ")" << std::endl;
    s.fcls += f / seeds;
    s.scls += c / seeds;
    s.glmm += g.metrics.rmseA / seeds;
    s.elmm += e.metrics.rmseA / seeds;
    s.glmmR += g.metrics.rmseR / seeds;
    s.elmmR += e.metrics.rmseR / seeds;
  }
  s.seconds = since(t0);
  return s;
}

std::string summary(const ProtocolSummary& s) {
  return "mean RMSE_A glmm=" + fmt("%.4f", s.glmm) + " elmm=" + fmt("%.4f", s.elmm) +
         " fcls=" + fmt("%.4f", s.fcls) + " scls=" + fmt("%.4f", s.scls) + ", runtime " +
         fmt("%.0f", s.seconds) + " s";
}

Outcome criterion1(const ProtocolSummary& s) {
  const double baseline = std::min(s.fcls, s.scls);
  return {s.glmm < s.elmm && s.elmm < baseline, "DC1 " + summary(s)};
}

Outcome criterion2(const ProtocolSummary& s) {
  return {s.glmm <= 1.1 * s.elmm && s.glmm < s.fcls && s.elmm < s.fcls, "DC0 " + summary(s)};
}

Outcome criterion3(const ProtocolSummary& s) {
  return {5.0 * s.glmmR <= s.elmmR, "DC0 mean RMSE_R glmm=" + fmt("%.5f", s.glmmR) +
                                        " elmm=" + fmt("%.5f", s.elmmR) + " ratio " +
                                        fmt("%.2f", s.elmmR / s.glmmR)};
}

// ---------------------------------------------------------------------------
// 4: FFT Psi solve against dense solves

Outcome criterion4() {
  const auto t0 = Clock::now();
  double worst = 0;
  for (Index p : {2, 4, 8})
    for (Index q : {2, 4, 8}) {
      const Index nb = 10, nr = 2, np = p * q;  // 20 fibers
      const GridShape g{p, q};
      const EndmemberMatrix<double> m0(oracle::uniform(nb, nr, 0.2, 1.0));
      const PixelEndmemberTensor<double> m(nb, nr, oracle::uniform(nb * nr, np, 0.0, 1.5));
      const double lm = 0.5 + oracle::uniform(1, 1)(0, 0), lp = oracle::uniform(1, 1, 1e-3, 1.0)(0, 0);
      const Mat out = updatePsiUnclamped(m, m0, g, lm, lp, PsiMode::Full);
      const Mat gram = oracle::denseGradientGram(p, q);
      for (Index k = 0; k < nr; ++k)
        for (Index l = 0; l < nb; ++l) {
          const double w = m0.data()(l, k);
          const Mat a = lm * w * w * Mat::Identity(np, np) + lp * gram;
          const Vec x = a.ldlt().solve(lm * w * m.fiber(l, k).transpose());
          worst = std::max(worst, (out.row(l + nb * k).transpose() - x).cwiseAbs().maxCoeff());
        }
    }
  const double secs = since(t0);
  return {worst < 1e-8 && secs < 5.0,
          "max abs error " + fmt("%.2e", worst) + " over 9 grids x 20 fibers, " + fmt("%.3f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 5: FCLS against a simplex-grid brute force

Outcome criterion5() {
  const auto t0 = Clock::now();
  const int steps = 1000;
  const double h = 1.0 / steps;
  bool ok = true;
  double worstGap = 0;
  for (int t = 0; t < 100; ++t) {
    const Mat m = oracle::uniform(10, 3, 0.0, 1.0);
    const Vec r = m * oracle::simplexColumns(3, 1) + 0.05 * oracle::gaussian(10, 1);
    const Mat gm = m.transpose() * m;
    const Vec c = m.transpose() * r;
    const Vec x = simplexQp<double>(gm, c);
    const double f = 0.5 * x.dot(gm * x) - c.dot(x);
    const double grid = oracle::simplexGridMinimum(gm, c, steps);
    // Rounding x to the grid moves it by at most 2h in l1, hence the bound.
    const double bound = (gm * x - c).norm() * 2 * h + 0.5 * gm.norm() * 4 * h * h;
    const double gap = grid - f;
    ok = ok && x.minCoeff() >= 0 && std::abs(x.sum() - 1) < 1e-12 && gap >= -1e-12 && gap <= bound;
    worstGap = std::max(worstGap, gap);
  }
  const double secs = since(t0);
  return {ok && secs < 30.0, "100 pixels, largest grid-minus-FCLS gap " + fmt("%.2e", worstGap) +
                                 ", " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 6: stationarity of the closed-form M-update

Outcome criterion6() {
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const Index nb = 4 + t % 7, nr = 2 + t % 3;
    const Vec r = oracle::uniform(nb, 1);
    const Vec alpha = oracle::simplexColumns(nr, 1);
    const Mat z = oracle::uniform(nb, nr, 0.1, 1.0);
    const double lambda = oracle::uniform(1, 1, 0.01, 10.0)(0, 0);
    const Mat mm = solveEndmemberPixel<double>(r, alpha, z, lambda);
    auto f = [&](const Mat& x) {
      return 0.5 * (r - x * alpha).squaredNorm() + 0.5 * lambda * (x - z).squaredNorm();
    };
    Mat grad(nb, nr);
    const double step = 1e-6;
    for (Index i = 0; i < nb; ++i)
      for (Index j = 0; j < nr; ++j) {
        Mat up = mm, dn = mm;
        up(i, j) += step;
        dn(i, j) -= step;
        grad(i, j) = (f(up) - f(dn)) / (2 * step);
      }
    worst = std::max(worst, grad.norm());
  }
  return {worst < 1e-6, "largest finite-difference gradient norm " + fmt("%.2e", worst) + " over 50 instances"};
}

// ---------------------------------------------------------------------------
// 7: monotone outer-loop descent

Outcome criterion7() {
  bool ok = true, inactive = true;
  double worstRise = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = synthScene<double>(Protocol::DC1, GridShape{30, 30}, 50, 3, 30.0, seed);
    GlmmConfig c;
    c.outerIters = 20;
    c.tolRel = 1e-300;
    const auto st = glmmUnmix<double>(s.cube, s.m0, c);
    ok = ok && st.costHistory.size() == 20 && (s.cube.data().array() > 0).all();
    double prev = st.initialCost;
    for (double j : st.costHistory) {
      worstRise = std::max(worstRise, j - prev);
      ok = ok && j <= prev + 1e-8;
      prev = j;
    }
    inactive = inactive && st.m.flat().minCoeff() > 0 && st.psi.flat().minCoeff() > 0;
  }
  return {ok, "5 seeds x 20 iterations, largest step change " + fmt("%.3e", worstRise) +
                  (inactive ? ", final M and Psi strictly positive" : ", a projection was active")};
}

// ---------------------------------------------------------------------------
// 8: model nesting and noiseless FCLS recovery

Outcome criterion8() {
  double nestErr = 0, fclsErr = 0;
  for (int t = 0; t < 10; ++t) {
    const Index nb = 20, nr = 3, np = 30;
    const GridShape g{5, 6};
    const EndmemberMatrix<double> m0(oracle::uniform(nb, nr, 0.1, 1.0));
    const AbundanceMatrix<double> a(oracle::simplexColumns(nr, np));
    const Mat diag = oracle::uniform(nr, np, 0.5, 1.5);
    Mat flat(nb * nr, np);
    for (Index n = 0; n < np; ++n)
      for (Index k = 0; k < nr; ++k) flat.block(k * nb, n, nb, 1).setConstant(diag(k, n));
    const auto glmmBand = glmmForward(m0, ScalingTensor<double>(nb, nr, flat), a, g);
    nestErr = std::max(nestErr, (glmmBand.data() - elmmForward(m0, diag, a, g).data()).cwiseAbs().maxCoeff());
    const auto glmmOnes = glmmForward(m0, ScalingTensor<double>::ones(nb, nr, np), a, g);
    const auto lmm = lmmForward(m0, a, g);
    nestErr = std::max(nestErr, (glmmOnes.data() - lmm.data()).cwiseAbs().maxCoeff());
    nestErr = std::max(nestErr,
                       (elmmForward(m0, Mat::Ones(nr, np), a, g).data() - lmm.data()).cwiseAbs().maxCoeff());
    fclsErr = std::max(fclsErr, (fcls(lmm, m0).data() - a.data()).cwiseAbs().maxCoeff());
  }
  return {nestErr < 1e-12 && fclsErr < 1e-6,
          "nesting error " + fmt("%.2e", nestErr) + ", FCLS recovery error " + fmt("%.2e", fclsErr)};
}

// ---------------------------------------------------------------------------
// 9: metric identities

Outcome criterion9() {
  const GridShape g{6, 7};
  const Index nb = 12, nr = 3, np = 42;
  const HsiCube<double> x(g, oracle::uniform(nb, np, 0.1, 1.0)), y(g, oracle::uniform(nb, np, 0.1, 1.0));
  const PixelEndmemberTensor<double> mx(nb, nr, oracle::uniform(nb * nr, np, 0.1, 1.0));
  const PixelEndmemberTensor<double> my(nb, nr, oracle::uniform(nb * nr, np, 0.1, 1.0));
  double err = 0;
  auto note = [&](double e) { err = std::max(err, std::abs(e)); };
  note(rmse(x, x));
  note(samR(x, x));
  note(samM(mx, mx));
  // SAM per-pixel and per-column scale invariance.
  Mat xs = x.data();
  Mat ms = mx.flat();
  const Vec s = oracle::uniform(np, 1, 0.1, 10.0);
  for (Index n = 0; n < np; ++n) {
    xs.col(n) *= s[n];
    for (Index k = 0; k < nr; ++k) ms.block(k * nb, n, nb, 1) *= s[(n + k) % np];
  }
  note(samR(HsiCube<double>(g, xs), y) - samR(x, y));
  note(samM(PixelEndmemberTensor<double>(nb, nr, ms), my) - samM(mx, my));
  // RMSE is positively homogeneous.
  note(rmse(HsiCube<double>(g, 3.5 * x.data()), HsiCube<double>(g, 3.5 * y.data())) - 3.5 * rmse(x, y));
  // Loop oracles.
  double sq = 0, ang = 0, angM = 0;
  for (Index n = 0; n < np; ++n) {
    for (Index l = 0; l < nb; ++l) sq += (x.data()(l, n) - y.data()(l, n)) * (x.data()(l, n) - y.data()(l, n));
    ang += oracle::angle(x.pixel(n), y.pixel(n));
    for (Index k = 0; k < nr; ++k) angM += oracle::angle(mx.slice(n).col(k), my.slice(n).col(k));
  }
  note(rmse(x, y) - std::sqrt(sq / double(nb * np)));
  note(samR(x, y) - ang / np);
  note(samM(mx, my) - angM / np);
  return {err < 1e-12, "largest deviation " + fmt("%.2e", err)};
}

// ---------------------------------------------------------------------------
// 10: every CLI command replays bit-identically from its manifest

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / "glmm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const std::string& name) { return (root / name).string(); };
  std::ostringstream sink;
  auto run = [&](const std::vector<std::string>& args) {
    if (cli::run(args, sink, sink) != 0) throw std::runtime_error("command failed: " + args[0]);
  };
  const std::string scene = p("scene");
  run({"synth", "--protocol", "dc1", "--rows", "12", "--cols", "10", "--bands", "20", "--seed", "7",
       "--out", scene});
  std::vector<std::string> dirs = {scene};
  for (const char* m : {"fcls", "scls", "elmm", "glmm"}) {
    run({"unmix", "--method", m, "--outer-iters", "10", "--cube", scene + "/cube.hsi", "--m0",
         scene + "/M0.csv", "--out", p(std::string("unmix_") + m)});
    dirs.push_back(p(std::string("unmix_") + m));
  }
  run({"eval", "--scene", scene, "--truth", "--results", p("unmix_fcls"), p("unmix_glmm"), "--out",
       p("eval")});
  run({"render", "--abundances", p("unmix_glmm") + "/A.csv", "--rows", "12", "--cols", "10", "--out",
       p("render")});
  run({"grid", "--scene", scene, "--lambda-m", "0.1,1", "--lambda-a", "0.01", "--lambda-psi",
       "1e-3,1e-1", "--outer-iters", "5", "--out", p("grid")});
  dirs.insert(dirs.end(), {p("eval"), p("render"), p("grid")});

  std::set<std::string> commands;
  int artifacts = 0;
  bool ok = true;
  for (const std::string& d : dirs) {
    const auto m = nlohmann::json::parse(io::readText(fs::path(d) / "manifest.json"));
    commands.insert(m["command"].get<std::string>());
    artifacts += int(m["artifacts"].size());
    std::ostringstream out, err;
    const int code = cli::run({"rerun", "--manifest", d + "/manifest.json", "--out", d + "_replay", "--check"},
                              out, err);
    if (code != 0) {
      ok = false;
      std::cout << "  " << d << ": " << out.str() << err.str();
    }
  }
  // rerun itself: replaying a replay's manifest must also match.
  std::ostringstream out, err;
  ok = ok && cli::run({"rerun", "--manifest", p("unmix_glmm_replay") + "/manifest.json", "--out",
                       p("unmix_glmm_replay2"), "--check"}, out, err) == 0;
  commands.insert("rerun");
  return {ok && commands.size() == 6, std::to_string(commands.size()) + " commands, " +
                                          std::to_string(artifacts) +
                                          " artifacts compared by checksum"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  int failures = 0;
  auto report = [&](int n, const std::function<Outcome()>& check) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
    failures += o.pass ? 0 : 1;
  };

  report(4, criterion4);
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  report(10, criterion10);
  if (wanted(1)) {
    const auto dc1 = runProtocol(Protocol::DC1);
    report(1, [&] { return criterion1(dc1); });
  }
  if (wanted(2) || wanted(3)) {
    const auto dc0 = runProtocol(Protocol::DC0);
    report(2, [&] { return criterion2(dc0); });
    report(3, [&] { return criterion3(dc0); });
  }
  return failures == 0 ? 0 : 1;
}
