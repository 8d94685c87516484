#include "cli.hpp"

#include "glmm/grid_search.hpp"
#include "glmm/io.hpp"
#include "glmm/mixing.hpp"
#include "glmm/report.hpp"
#include "glmm/solver.hpp"
#include "glmm/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

namespace glmm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

const std::set<std::string> kPathOptions = {"--cube",       "--m0",  "--a0",      "--scene",
                                            "--results",    "--out", "--manifest", "--abundances"};

/// Rewrites the values of path-valued options to absolute paths so a
/// recorded command line can be replayed from any directory.
std::vector<std::string> absolutizePaths(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const auto eq = a.find('=');
    if (a.rfind("--", 0) == 0 && eq != std::string::npos && kPathOptions.count(a.substr(0, eq))) {
      out.push_back(a.substr(0, eq + 1) + fs::absolute(a.substr(eq + 1)).lexically_normal().string());
    } else if (kPathOptions.count(a) && i + 1 < args.size()) {
      out.push_back(a);
      out.push_back(fs::absolute(args[++i]).lexically_normal().string());
    } else {
      out.push_back(a);
    }
  }
  return out;
}

json numberOrInf(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); }

json configJson(const GlmmConfig& c) {
  json j;
  j["lambda_m"] = c.lambdaM;
  j["lambda_a"] = c.lambdaA;
  j["lambda_psi"] = c.lambdaPsi;
  j["admm_rho"] = c.admmRho;
  j["admm_iters"] = c.admmIters;
  j["admm_tol"] = c.admmTol;
  j["outer_iters"] = c.outerIters;
  j["tol_rel"] = c.tolRel;
  j["psi_mode"] = psiModeName(c.psiMode);
  j["admm_warm_start"] = c.admmWarmStart;
  return j;
}

json metricsJson(const MetricRow& m) {
  json j;
  j["method"] = m.method;
  j["rmse_a"] = m.rmseA;
  j["rmse_m"] = m.rmseM ? json(*m.rmseM) : json(nullptr);
  j["sam_m"] = m.samM ? json(*m.samM) : json(nullptr);
  j["rmse_r"] = m.rmseR;
  j["sam_r"] = m.samR;
  return j;
}

/// Bookkeeping shared by every command that writes an output directory.
class RunRecord {
 public:
  RunRecord(std::string command, const std::vector<std::string>& args, fs::path out)
      : command_(std::move(command)), argv_(absolutizePaths(args)), out_(std::move(out)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_);
  }

  const fs::path& out() const { return out_; }
  json& config() { return config_; }
  json& inputs() { return inputs_; }
  json& extra() { return extra_; }
  void setSeed(std::uint64_t s) { seed_ = s; }

  /// A deterministic output file, checksummed into the manifest.
  fs::path artifact(const std::string& name) {
    artifacts_.insert(name);
    return out_ / name;
  }
  /// An output that legitimately differs between runs (timings).
  fs::path volatileOutput(const std::string& name) {
    volatile_.insert(name);
    return out_ / name;
  }

  void writeManifest() const {
    json m;
    m["tool"] = "glmm";
    m["version"] = GLMM_VERSION;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config"] = config_;
    m["config_hash"] = hex64(fnv1a(config_.dump()));
    m["inputs"] = inputs_;
    m["seed"] = seed_ ? json(*seed_) : json(nullptr);
    m["output_dir"] = fs::absolute(out_).lexically_normal().string();
    json arts = json::object();
    for (const std::string& a : artifacts_) arts[a] = hex64(fnv1a(io::readText(out_ / a)));
    m["artifacts"] = arts;
    m["volatile_outputs"] = std::vector<std::string>(volatile_.begin(), volatile_.end());
    for (auto it = extra_.begin(); it != extra_.end(); ++it) m[it.key()] = it.value();
    m["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::writeText(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path out_;
  json config_ = json::object();
  json inputs_ = json::object();
  json extra_ = json::object();
  std::optional<std::uint64_t> seed_;
  std::set<std::string> artifacts_;
  std::set<std::string> volatile_;
  std::chrono::steady_clock::time_point start_;
};

std::string inputRecord(const std::string& path) {
  return fs::absolute(path).lexically_normal().string();
}

std::string inputChecksum(const std::string& path) { return hex64(fnv1a(io::readText(path))); }

void addSolverOptions(CLI::App* sub, GlmmConfig& c) {
  sub->add_option("--lambda-m", c.lambdaM, "Endmember fidelity weight")->capture_default_str();
  sub->add_option("--lambda-a", c.lambdaA, "Abundance total-variation weight")->capture_default_str();
  sub->add_option("--lambda-psi", c.lambdaPsi, "Scaling smoothness weight")->capture_default_str();
  sub->add_option("--admm-rho", c.admmRho, "ADMM penalty parameter")->capture_default_str();
  sub->add_option("--admm-iters", c.admmIters, "ADMM iterations per outer iteration")
      ->capture_default_str();
  sub->add_option("--admm-tol", c.admmTol, "ADMM residual tolerance (0 runs all iterations)")
      ->capture_default_str();
  sub->add_option("--outer-iters", c.outerIters, "Maximum outer iterations")->capture_default_str();
  sub->add_option("--tol", c.tolRel, "Relative-change stopping tolerance")->capture_default_str();
  sub->add_flag("!--no-warm-start", c.admmWarmStart,
                "Restart the ADMM from scratch at every outer iteration");
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string protocol = "dc1";
  Index rows = 50, cols = 50, bands = 100, endmembers = 3;
  std::string snrDb = "30";
  std::uint64_t seed = 1;
  std::string out;
};

int runSynth(const SynthOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const Protocol protocol = parseProtocol(o.protocol);
  const double snr = io::parseNumber(o.snrDb);
  const auto scene =
      synthScene<double>(protocol, GridShape{o.rows, o.cols}, o.bands, o.endmembers, snr, o.seed);
  RunRecord rec("synth", args, o.out);
  io::saveScene(scene, rec.out());
  for (const char* f : {"cube.hsi", "cube_clean.hsi", "truth_A.csv", "truth_Psi.csv", "M0.csv",
                        "meta.json"})
    rec.artifact(f);
  rec.setSeed(o.seed);
  rec.config() = {{"protocol", protocolName(protocol)}, {"rows", o.rows},
                  {"cols", o.cols},                     {"bands", o.bands},
                  {"endmembers", o.endmembers},         {"snr_db", numberOrInf(snr)},
                  {"seed", o.seed}};
  const double measured = measuredSnrDb(scene.cubeClean, scene.cube);
  rec.extra()["measured_snr_db"] = numberOrInf(measured);
  rec.writeManifest();
  out << "wrote " << protocolName(protocol) << " scene to " << o.out << " (measured SNR "
      << io::formatNumber(measured) << " dB)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// unmix

struct UnmixOptions {
  std::string method = "glmm";
  std::string cube, m0, a0, out;
  GlmmConfig config;
};

int runUnmix(const UnmixOptions& o, bool solverFlagsGiven, const std::vector<std::string>& args,
             std::ostream& out, std::ostream& err) {
  static const std::set<std::string> methods = {"fcls", "scls", "elmm", "glmm"};
  if (!methods.count(o.method)) throw std::invalid_argument("unknown method '" + o.method + "'");
  const bool iterative = o.method == "glmm" || o.method == "elmm";
  if (!iterative && solverFlagsGiven)
    err << "warning: solver options are ignored by " << o.method << "\n";
  if (!iterative && !o.a0.empty()) err << "warning: --a0 is ignored by " << o.method << "\n";

  const HsiCube<double> cube = io::loadCube(o.cube);
  const EndmemberMatrix<double> m0(io::loadMatrixCsv(o.m0));
  if (m0.bands() != cube.bands())
    throw std::invalid_argument("M0 has " + std::to_string(m0.bands()) + " bands but the cube has " +
                                std::to_string(cube.bands()));

  RunRecord rec("unmix", args, o.out);
  rec.inputs()["cube"] = inputRecord(o.cube);
  rec.inputs()["cube_fnv1a"] = inputChecksum(o.cube);
  rec.inputs()["m0"] = inputRecord(o.m0);
  rec.inputs()["m0_fnv1a"] = inputChecksum(o.m0);

  json result;
  result["method"] = o.method;
  result["rows"] = cube.rows();
  result["cols"] = cube.cols();
  result["bands"] = cube.bands();
  result["endmembers"] = m0.count();

  if (o.method == "fcls") {
    rec.config() = {{"method", o.method}};
    io::saveMatrixCsv(fcls(cube, m0).data(), rec.artifact("A.csv"));
  } else if (o.method == "scls") {
    rec.config() = {{"method", o.method}};
    const SclsResult<double> s = scls(cube, m0);
    io::saveMatrixCsv(s.abundances.data(), rec.artifact("A.csv"));
    io::saveMatrixCsv(s.scales.transpose(), rec.artifact("scales.csv"));
    result["degenerate_pixels"] = s.degenerate;
  } else {
    GlmmConfig c = o.config;
    c.psiMode = o.method == "elmm" ? PsiMode::BandConstant : PsiMode::Full;
    rec.config() = configJson(c);
    rec.config()["method"] = o.method;
    std::optional<AbundanceMatrix<double>> a0;
    if (!o.a0.empty()) {
      a0 = AbundanceMatrix<double>(io::loadMatrixCsv(o.a0));
      rec.inputs()["a0"] = inputRecord(o.a0);
      rec.inputs()["a0_fnv1a"] = inputChecksum(o.a0);
    }
    const SolverState<double> st = glmmUnmix<double>(cube, m0, c, a0);
    for (const std::string& w : st.warnings) err << "warning: " << w << "\n";
    io::saveMatrixCsv(st.a.data(), rec.artifact("A.csv"));
    io::saveTensorCsv(st.m, rec.artifact("M.csv"));
    io::saveTensorCsv(st.psi, rec.artifact("Psi.csv"));
    std::string history = "iteration,cost\n0," + io::formatNumber(st.initialCost) + "\n";
    for (std::size_t i = 0; i < st.costHistory.size(); ++i)
      history += std::to_string(i + 1) + "," + io::formatNumber(st.costHistory[i]) + "\n";
    io::writeText(rec.artifact("cost_history.csv"), history);
    result["iterations_run"] = st.iterationsRun;
    result["converged"] = st.converged;
    result["initial_cost"] = st.initialCost;
    result["final_cost"] = st.costHistory.empty() ? st.initialCost : st.costHistory.back();
    result["admm_converged_iterations"] =
        std::count(st.admmConverged.begin(), st.admmConverged.end(), true);
    result["warnings"] = st.warnings;
  }
  io::writeText(rec.artifact("result.json"), result.dump(2) + "\n");
  rec.writeManifest();
  out << o.method << ": wrote results to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string scene, out;
  std::vector<std::string> results;
  bool truth = false;
  bool perEndmemberSam = false;
};

MethodEstimate loadEstimate(const fs::path& dir, const SyntheticScene<double>& scene) {
  const auto meta = json::parse(io::readText(dir / "result.json"));
  const std::string method = meta.at("method").get<std::string>();
  AbundanceMatrix<double> a(io::loadMatrixCsv(dir / "A.csv"));
  if (a.count() != scene.m0.count() || a.pixels() != scene.cube.pixels())
    throw std::invalid_argument(dir.string() + ": abundances do not match the scene dimensions");
  const GridShape grid = scene.grid();
  if (method == "fcls") return fclsEstimate(method, scene.m0, a, grid);
  if (method == "scls") {
    const Matrix<double> scales = io::loadMatrixCsv(dir / "scales.csv");
    if (scales.rows() != 1 || scales.cols() != a.pixels())
      throw std::invalid_argument(dir.string() + ": scales.csv has the wrong shape");
    return sclsEstimate(method, scene.m0, SclsResult<double>{a, scales.row(0).transpose(), {}}, grid);
  }
  if (method == "glmm" || method == "elmm") {
    auto m = io::loadTensor<PixelEndmemberTag>(dir / "M.csv");
    if (m.bands() != scene.cube.bands() || m.count() != a.count() || m.pixels() != a.pixels())
      throw std::invalid_argument(dir.string() + ": M.csv does not match the scene dimensions");
    HsiCube<double> recon = reconstruct(m, a, grid);
    return {method, std::move(a), std::move(m), std::move(recon)};
  }
  throw std::invalid_argument(dir.string() + ": unknown method '" + method + "'");
}

int runEval(const EvalOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.results.empty() && !o.truth)
    throw std::invalid_argument("eval needs --results, --truth, or both");
  const SyntheticScene<double> scene = io::loadScene(o.scene);
  std::vector<MethodEstimate> estimates;
  std::map<std::string, int> seen;
  RunRecord rec("eval", args, o.out);
  rec.inputs()["scene"] = inputRecord(o.scene);
  rec.inputs()["results"] = json::array();
  for (const std::string& r : o.results) {
    MethodEstimate e = loadEstimate(r, scene);
    if (const int n = ++seen[e.name]; n > 1) e.name += "_" + std::to_string(n);
    estimates.push_back(std::move(e));
    rec.inputs()["results"].push_back(inputRecord(r));
  }
  if (o.truth) estimates.push_back(truthEstimate(scene));
  rec.config() = {{"truth", o.truth}, {"per_endmember_sam", o.perEndmemberSam}};
  rec.setSeed(scene.seed);
  const std::string csv = reportToCsv(buildReport(scene, estimates, o.perEndmemberSam));
  io::writeText(rec.artifact("report.csv"), csv);
  rec.writeManifest();
  out << csv;
  return 0;
}

// ---------------------------------------------------------------------------
// render

struct RenderOptions {
  std::string abundances, out;
  Index rows = 0, cols = 0;
};

int runRender(const RenderOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const Matrix<double> a = io::loadMatrixCsv(o.abundances);
  if (a.cols() != o.rows * o.cols)
    throw std::invalid_argument("abundance matrix has " + std::to_string(a.cols()) +
                                " pixels, expected rows*cols = " + std::to_string(o.rows * o.cols));
  RunRecord rec("render", args, o.out);
  rec.inputs()["abundances"] = inputRecord(o.abundances);
  rec.config() = {{"rows", o.rows}, {"cols", o.cols}};
  for (Index k = 0; k < a.rows(); ++k) {
    std::string pgm = "P5\n" + std::to_string(o.cols) + " " + std::to_string(o.rows) + "\n255\n";
    for (Index n = 0; n < a.cols(); ++n) {
      const double v = std::clamp(std::round(255.0 * a(k, n)), 0.0, 255.0);
      pgm.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
    io::writeText(rec.artifact("endmember_" + std::to_string(k + 1) + ".pgm"), pgm);
  }
  rec.writeManifest();
  out << "wrote " << a.rows() << " abundance maps to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// grid

struct GridOptions {
  std::string scene, out, method = "glmm";
  GridSpec grid;
  GlmmConfig base;
  unsigned threads = 0;
};

int runGrid(const GridOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.method != "glmm" && o.method != "elmm")
    throw std::invalid_argument("grid supports methods glmm and elmm, not '" + o.method + "'");
  const SyntheticScene<double> scene = io::loadScene(o.scene);
  GlmmConfig base = o.base;
  base.psiMode = o.method == "elmm" ? PsiMode::BandConstant : PsiMode::Full;
  const GridSearchResult result = gridSearch(scene, o.grid, base, o.threads);

  RunRecord rec("grid", args, o.out);
  rec.inputs()["scene"] = inputRecord(o.scene);
  rec.setSeed(scene.seed);
  rec.config() = configJson(base);
  rec.config().erase("lambda_m");
  rec.config().erase("lambda_a");
  rec.config().erase("lambda_psi");
  rec.config()["method"] = o.method;
  rec.config()["grid"] = {{"lambda_m", o.grid.lambdaM},
                          {"lambda_a", o.grid.lambdaA},
                          {"lambda_psi", o.grid.lambdaPsi}};
  io::writeText(rec.artifact("grid_report.csv"), gridReportCsv(result));
  io::writeText(rec.volatileOutput("grid_timing.csv"), gridTimingCsv(result));
  json best;
  best["config"] = configJson(result.best);
  best["metrics"] = metricsJson(result.rows.front().metrics);
  best["metrics"]["method"] = o.method;
  io::writeText(rec.artifact("best.json"), best.dump(2) + "\n");
  rec.writeManifest();
  const GridRow& top = result.rows.front();
  out << o.method << ": best of " << result.rows.size() << " configs lambda_m="
      << io::formatNumber(top.config.lambdaM) << " lambda_a=" << io::formatNumber(top.config.lambdaA)
      << " lambda_psi=" << io::formatNumber(top.config.lambdaPsi)
      << " rmse_a=" << io::formatNumber(top.metrics.rmseA) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rerun

struct RerunOptions {
  std::string manifest, out;
  bool check = false;
};

int runRerun(const RerunOptions& o, std::ostream& out, std::ostream& err) {
  const auto original = json::parse(io::readText(o.manifest));
  std::vector<std::string> argv = original.at("argv").get<std::vector<std::string>>();
  bool replaced = false;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out" && i + 1 < argv.size()) {
      argv[i + 1] = o.out;
      replaced = true;
    } else if (argv[i].rfind("--out=", 0) == 0) {
      argv[i] = "--out=" + o.out;
      replaced = true;
    }
  }
  if (!replaced) throw std::invalid_argument(o.manifest + ": recorded command has no --out");
  if (!argv.empty() && argv.front() == "rerun")
    throw std::invalid_argument(o.manifest + ": refusing to replay a rerun");
  if (const int code = run(argv, out, err); code != 0) return code;
  if (!o.check) return 0;

  const auto replay = json::parse(io::readText(fs::path(o.out) / "manifest.json"));
  const json& want = original.at("artifacts");
  const json& got = replay.at("artifacts");
  int mismatches = 0;
  for (auto it = want.begin(); it != want.end(); ++it) {
    const bool same = got.contains(it.key()) && got.at(it.key()) == it.value();
    out << (same ? "identical " : "DIFFERENT ") << it.key() << "\n";
    mismatches += same ? 0 : 1;
  }
  for (auto it = got.begin(); it != got.end(); ++it)
    if (!want.contains(it.key())) {
      out << "DIFFERENT " << it.key() << " (new artifact)\n";
      ++mismatches;
    }
  if (mismatches) err << "error: " << mismatches << " artifact(s) differ from " << o.manifest << "\n";
  return mismatches ? 3 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral unmixing with spatially smooth spectral variability", "glmm"};
  app.set_version_flag("--version", std::string(GLMM_VERSION));
  app.require_subcommand(1);
  app.footer(
      "Environment:\n  GLMM_THREADS  worker threads for `grid` (default: all hardware threads)");

  SynthOptions synth;
  CLI::App* synthCmd = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  synthCmd->add_option("--protocol", synth.protocol, "dc0 (band-constant scaling) or dc1")
      ->capture_default_str();
  synthCmd->add_option("--rows", synth.rows)->capture_default_str()->check(CLI::PositiveNumber);
  synthCmd->add_option("--cols", synth.cols)->capture_default_str()->check(CLI::PositiveNumber);
  synthCmd->add_option("--bands", synth.bands)->capture_default_str()->check(CLI::PositiveNumber);
  synthCmd->add_option("--endmembers", synth.endmembers)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synthCmd->add_option("--snr-db", synth.snrDb, "Noise level in dB; 'inf' for a noiseless cube")
      ->capture_default_str();
  synthCmd->add_option("--seed", synth.seed)->capture_default_str();
  synthCmd->add_option("--out", synth.out, "Output scene directory")->required();

  UnmixOptions unmix;
  CLI::App* unmixCmd = app.add_subcommand("unmix", "Estimate abundances (and endmembers) of a cube");
  unmixCmd->add_option("--method", unmix.method, "fcls, scls, elmm or glmm")->capture_default_str();
  unmixCmd->add_option("--cube", unmix.cube, "Cube file")->required();
  unmixCmd->add_option("--m0", unmix.m0, "Reference endmember matrix CSV (L x R)")->required();
  unmixCmd->add_option("--a0", unmix.a0, "Initial abundances CSV (R x N); default SCLS");
  addSolverOptions(unmixCmd, unmix.config);
  unmixCmd->add_option("--out", unmix.out, "Output directory")->required();

  EvalOptions eval;
  CLI::App* evalCmd = app.add_subcommand("eval", "Score unmixing results against a scene's truth");
  evalCmd->add_option("--scene", eval.scene, "Scene directory")->required();
  evalCmd->add_option("--results", eval.results, "Result directories from `unmix`")->expected(1, -1);
  evalCmd->add_flag("--truth", eval.truth, "Append a row scoring the ground truth itself");
  evalCmd->add_flag("--per-endmember-sam", eval.perEndmemberSam,
                    "Also report SAM_M divided by the endmember count");
  evalCmd->add_option("--out", eval.out, "Output directory")->required();

  RenderOptions render;
  CLI::App* renderCmd = app.add_subcommand("render", "Write abundance maps as 8-bit PGM images");
  renderCmd->add_option("--abundances", render.abundances, "Abundance CSV (R x N)")->required();
  renderCmd->add_option("--rows", render.rows)->required()->check(CLI::PositiveNumber);
  renderCmd->add_option("--cols", render.cols)->required()->check(CLI::PositiveNumber);
  renderCmd->add_option("--out", render.out, "Output directory")->required();

  GridOptions grid;
  CLI::App* gridCmd = app.add_subcommand("grid", "Grid-search the regularization weights");
  gridCmd->add_option("--scene", grid.scene, "Scene directory")->required();
  gridCmd->add_option("--method", grid.method, "glmm or elmm")->capture_default_str();
  gridCmd->add_option("--lambda-m", grid.grid.lambdaM, "Comma-separated values")
      ->delimiter(',')
      ->capture_default_str();
  gridCmd->add_option("--lambda-a", grid.grid.lambdaA, "Comma-separated values")
      ->delimiter(',')
      ->capture_default_str();
  gridCmd->add_option("--lambda-psi", grid.grid.lambdaPsi, "Comma-separated values")
      ->delimiter(',')
      ->capture_default_str();
  gridCmd->add_option("--admm-rho", grid.base.admmRho)->capture_default_str();
  gridCmd->add_option("--admm-iters", grid.base.admmIters)->capture_default_str();
  gridCmd->add_option("--admm-tol", grid.base.admmTol)->capture_default_str();
  gridCmd->add_option("--outer-iters", grid.base.outerIters)->capture_default_str();
  gridCmd->add_option("--tol", grid.base.tolRel)->capture_default_str();
  gridCmd->add_option("--threads", grid.threads, "Worker threads (0: GLMM_THREADS or all)")
      ->capture_default_str();
  gridCmd->add_option("--out", grid.out, "Output directory")->required();

  RerunOptions rerun;
  CLI::App* rerunCmd = app.add_subcommand("rerun", "Replay the command recorded in a manifest");
  rerunCmd->add_option("--manifest", rerun.manifest, "manifest.json of an earlier run")->required();
  rerunCmd->add_option("--out", rerun.out, "Output directory for the replay")->required();
  rerunCmd->add_flag("--check", rerun.check,
                     "Compare artifact checksums with the original and fail on any difference");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synthCmd->parsed()) return runSynth(synth, args, out);
    if (unmixCmd->parsed()) {
      bool solverFlags = false;
      for (const char* name : {"--lambda-m", "--lambda-a", "--lambda-psi", "--admm-rho",
                               "--admm-iters", "--admm-tol", "--outer-iters", "--tol",
                               "--no-warm-start"})
        solverFlags = solverFlags || unmixCmd->count(name) > 0;
      return runUnmix(unmix, solverFlags, args, out, err);
    }
    if (evalCmd->parsed()) return runEval(eval, args, out);
    if (renderCmd->parsed()) return runRender(render, args, out);
    if (gridCmd->parsed()) return runGrid(grid, args, out);
    if (rerunCmd->parsed()) return runRerun(rerun, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace glmm::cli
