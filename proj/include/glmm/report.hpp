#pragma once

// Per-method evaluation against a scene's ground truth.

#include "glmm/least_squares.hpp"
#include "glmm/solver.hpp"
#include "glmm/synthetic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace glmm {

/// What a method produced, reduced to the quantities the metrics need.
struct MethodEstimate {
  std::string name;
  AbundanceMatrix<double> a;
  /// Per-pixel endmembers; absent for methods without variability (FCLS).
  std::optional<PixelEndmemberTensor<double>> m;
  /// The method's own model of the observed cube.
  HsiCube<double> reconstruction;
};

/// r_n = M0 a_n.
MethodEstimate fclsEstimate(std::string name, const EndmemberMatrix<double>& m0,
                            const AbundanceMatrix<double>& a, GridShape grid);
/// M_n = s_n M0, r_n = s_n M0 a_n.
MethodEstimate sclsEstimate(std::string name, const EndmemberMatrix<double>& m0,
                            const SclsResult<double>& result, GridShape grid);
/// r_n = M_n a_n.
MethodEstimate stateEstimate(std::string name, const SolverState<double>& state, GridShape grid);
/// The scene's own ground truth as a method.
MethodEstimate truthEstimate(const SyntheticScene<double>& scene);

struct MetricRow {
  std::string method;
  double rmseA = 0.0;
  std::optional<double> rmseM;
  std::optional<double> samM;
  double rmseR = 0.0;
  double samR = 0.0;
  /// SAM_M divided by R as well; only filled when requested.
  std::optional<double> samMPerEndmember;

  bool operator==(const MetricRow&) const = default;
};

struct SceneInfo {
  std::string protocol;
  std::uint64_t seed = 0;
  double snrDb = 0.0;
  Index rows = 0, cols = 0, bands = 0, endmembers = 0;

  bool operator==(const SceneInfo&) const = default;
};

struct EvaluationReport {
  SceneInfo scene;
  std::vector<MetricRow> rows;

  bool operator==(const EvaluationReport&) const = default;
};

SceneInfo sceneInfo(const SyntheticScene<double>& scene);

/// RMSE_A and RMSE_M/SAM_M against the truth; RMSE_R/SAM_R of the
/// estimate's reconstruction against the observed (noisy) cube.
MetricRow evaluateEstimate(const SyntheticScene<double>& scene, const MethodEstimate& estimate,
                           bool perEndmemberSam = false);

EvaluationReport buildReport(const SyntheticScene<double>& scene,
                             const std::vector<MethodEstimate>& estimates,
                             bool perEndmemberSam = false);

/// First line "# scene key=value ...", then a header row and one row per
/// method. Missing metrics are empty cells.
std::string reportToCsv(const EvaluationReport& report);
EvaluationReport reportFromCsv(const std::string& csv);

}  // namespace glmm
