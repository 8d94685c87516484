#pragma once

// Exhaustive regularization-weight search scored by abundance RMSE.

#include "glmm/report.hpp"
#include "glmm/solver.hpp"
#include "glmm/synthetic.hpp"

#include <string>
#include <vector>

namespace glmm {

struct GridSpec {
  std::vector<double> lambdaM{0.01, 0.1, 1.0, 5.0, 10.0, 15.0};
  std::vector<double> lambdaA{0.001, 0.01, 0.05};
  std::vector<double> lambdaPsi{1e-6, 1e-3, 1e-1};

  std::size_t size() const { return lambdaM.size() * lambdaA.size() * lambdaPsi.size(); }
};

struct GridRow {
  GlmmConfig config;
  MetricRow metrics;
  double wallSeconds = 0.0;
};

struct GridSearchResult {
  GlmmConfig best;
  /// Ascending by RMSE_A; ties keep enumeration order.
  std::vector<GridRow> rows;
};

/// Worker threads from GLMM_THREADS, defaulting to every hardware thread.
unsigned defaultThreadCount();

/// Runs glmmUnmix for every (lambda_M, lambda_A, lambda_Psi) in the grid on
/// top of `base`, all starting from the same SCLS initialization. Results do
/// not depend on `threads`.
GridSearchResult gridSearch(const SyntheticScene<double>& scene, const GridSpec& grid,
                            const GlmmConfig& base, unsigned threads = 0);

/// lambda_m,lambda_a,lambda_psi,rmse_a,rmse_m,rmse_r,sam_r,sam_m
std::string gridReportCsv(const GridSearchResult& result);
/// lambda_m,lambda_a,lambda_psi,wall_time_s
std::string gridTimingCsv(const GridSearchResult& result);

}  // namespace glmm
