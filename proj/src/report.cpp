#include "glmm/report.hpp"

#include "glmm/io.hpp"
#include "glmm/metrics.hpp"
#include "glmm/mixing.hpp"

#include <sstream>

namespace glmm {

MethodEstimate fclsEstimate(std::string name, const EndmemberMatrix<double>& m0,
                            const AbundanceMatrix<double>& a, GridShape grid) {
  return {std::move(name), a, std::nullopt, lmmForward(m0, a, grid)};
}

MethodEstimate sclsEstimate(std::string name, const EndmemberMatrix<double>& m0,
                            const SclsResult<double>& result, GridShape grid) {
  const Index nb = m0.bands(), nr = m0.count(), np = result.abundances.pixels();
  Matrix<double> flat(nb * nr, np);
  const Eigen::Map<const Vector<double>> m0v(m0.data().data(), m0.data().size());
  for (Index n = 0; n < np; ++n) flat.col(n) = result.scales[n] * m0v;
  Matrix<double> recon = m0.data() * result.abundances.data();
  recon.array().rowwise() *= result.scales.transpose().array();
  return {std::move(name), result.abundances, PixelEndmemberTensor<double>(nb, nr, std::move(flat)),
          HsiCube<double>(grid, std::move(recon))};
}

MethodEstimate stateEstimate(std::string name, const SolverState<double>& state, GridShape grid) {
  return {std::move(name), state.a, state.m, reconstruct(state.m, state.a, grid)};
}

MethodEstimate truthEstimate(const SyntheticScene<double>& scene) {
  return {"truth", scene.truthA, scene.truthM, scene.cubeClean};
}

SceneInfo sceneInfo(const SyntheticScene<double>& scene) {
  return {protocolName(scene.protocol), scene.seed, scene.snrDb, scene.cube.rows(),
          scene.cube.cols(), scene.cube.bands(), scene.m0.count()};
}

MetricRow evaluateEstimate(const SyntheticScene<double>& scene, const MethodEstimate& e,
                           bool perEndmemberSam) {
  MetricRow row;
  row.method = e.name;
  row.rmseA = rmse(e.a, scene.truthA);
  if (e.m) {
    row.rmseM = rmse(*e.m, scene.truthM);
    row.samM = samM(*e.m, scene.truthM);
    if (perEndmemberSam) row.samMPerEndmember = samM(*e.m, scene.truthM, true);
  }
  row.rmseR = rmse(e.reconstruction, scene.cube);
  row.samR = samR(e.reconstruction, scene.cube);
  return row;
}

EvaluationReport buildReport(const SyntheticScene<double>& scene,
                             const std::vector<MethodEstimate>& estimates, bool perEndmemberSam) {
  detail::require(!estimates.empty(), "buildReport: no methods to evaluate");
  EvaluationReport report{sceneInfo(scene), {}};
  for (const MethodEstimate& e : estimates)
    report.rows.push_back(evaluateEstimate(scene, e, perEndmemberSam));
  return report;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? io::formatNumber(*v) : std::string(); }

std::optional<double> optionalCell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return io::parseNumber(s);
}

}  // namespace

std::string reportToCsv(const EvaluationReport& r) {
  const bool perEndmember =
      std::any_of(r.rows.begin(), r.rows.end(), [](const MetricRow& m) { return m.samMPerEndmember; });
  std::ostringstream os;
  os << "# scene protocol=" << r.scene.protocol << " seed=" << r.scene.seed
     << " snr_db=" << io::formatNumber(r.scene.snrDb) << " rows=" << r.scene.rows
     << " cols=" << r.scene.cols << " bands=" << r.scene.bands
     << " endmembers=" << r.scene.endmembers << "\n";
  os << "method,rmse_a,rmse_m,sam_m,rmse_r,sam_r" << (perEndmember ? ",sam_m_per_endmember" : "")
     << "\n";
  for (const MetricRow& m : r.rows) {
    os << m.method << "," << io::formatNumber(m.rmseA) << "," << cell(m.rmseM) << ","
       << cell(m.samM) << "," << io::formatNumber(m.rmseR) << "," << io::formatNumber(m.samR);
    if (perEndmember) os << "," << cell(m.samMPerEndmember);
    os << "\n";
  }
  return os.str();
}

EvaluationReport reportFromCsv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  EvaluationReport r;
  if (!std::getline(is, line) || line.rfind("# scene ", 0) != 0)
    throw std::invalid_argument("report CSV: missing scene line");
  {
    std::istringstream fields(line.substr(8));
    std::string kv;
    while (fields >> kv) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "protocol") r.scene.protocol = value;
      else if (key == "seed") r.scene.seed = std::stoull(value);
      else if (key == "snr_db") r.scene.snrDb = io::parseNumber(value);
      else if (key == "rows") r.scene.rows = std::stoll(value);
      else if (key == "cols") r.scene.cols = std::stoll(value);
      else if (key == "bands") r.scene.bands = std::stoll(value);
      else if (key == "endmembers") r.scene.endmembers = std::stoll(value);
    }
  }
  if (!std::getline(is, line) || line.rfind("method,rmse_a,rmse_m,sam_m,rmse_r,sam_r", 0) != 0)
    throw std::invalid_argument("report CSV: missing header row");
  const bool perEndmember = line.find("sam_m_per_endmember") != std::string::npos;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string c;
    std::istringstream ls(line);
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != (perEndmember ? 7u : 6u))
      throw std::invalid_argument("report CSV: malformed row '" + line + "'");
    MetricRow m;
    m.method = cells[0];
    m.rmseA = io::parseNumber(cells[1]);
    m.rmseM = optionalCell(cells[2]);
    m.samM = optionalCell(cells[3]);
    m.rmseR = io::parseNumber(cells[4]);
    m.samR = io::parseNumber(cells[5]);
    if (perEndmember) m.samMPerEndmember = optionalCell(cells[6]);
    r.rows.push_back(m);
  }
  return r;
}

}  // namespace glmm
