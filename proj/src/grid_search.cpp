#include "glmm/grid_search.hpp"

#include "glmm/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace glmm {

unsigned defaultThreadCount() {
  if (const char* env = std::getenv("GLMM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

GridSearchResult gridSearch(const SyntheticScene<double>& scene, const GridSpec& grid,
                            const GlmmConfig& base, unsigned threads) {
  detail::require(grid.size() > 0, "gridSearch: empty grid");
  std::vector<GlmmConfig> configs;
  for (double lm : grid.lambdaM)
    for (double la : grid.lambdaA)
      for (double lp : grid.lambdaPsi) {
        GlmmConfig c = base;
        c.lambdaM = lm;
        c.lambdaA = la;
        c.lambdaPsi = lp;
        c.validate();
        configs.push_back(c);
      }

  const AbundanceMatrix<double> a0 = scls(scene.cube, scene.m0).abundances;
  std::vector<GridRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      const SolverState<double> st = glmmUnmix(scene.cube, scene.m0, configs[i], a0);
      const auto t1 = std::chrono::steady_clock::now();
      rows[i].config = configs[i];
      rows[i].metrics = evaluateEstimate(scene, stateEstimate(psiModeName(configs[i].psiMode), st,
                                                              scene.grid()));
      rows[i].wallSeconds = std::chrono::duration<double>(t1 - t0).count();
    }
  };
  if (threads == 0) threads = defaultThreadCount();
  threads = std::min<unsigned>(threads, static_cast<unsigned>(configs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    return a.metrics.rmseA < b.metrics.rmseA;
  });
  return {rows.front().config, std::move(rows)};
}

std::string gridReportCsv(const GridSearchResult& result) {
  std::ostringstream os;
  os << "lambda_m,lambda_a,lambda_psi,rmse_a,rmse_m,rmse_r,sam_r,sam_m\n";
  for (const GridRow& r : result.rows) {
    os << io::formatNumber(r.config.lambdaM) << "," << io::formatNumber(r.config.lambdaA) << ","
       << io::formatNumber(r.config.lambdaPsi) << "," << io::formatNumber(r.metrics.rmseA) << ","
       << io::formatNumber(r.metrics.rmseM.value_or(0.0)) << ","
       << io::formatNumber(r.metrics.rmseR) << "," << io::formatNumber(r.metrics.samR) << ","
       << io::formatNumber(r.metrics.samM.value_or(0.0)) << "\n";
  }
  return os.str();
}

std::string gridTimingCsv(const GridSearchResult& result) {
  std::ostringstream os;
  os << "lambda_m,lambda_a,lambda_psi,wall_time_s\n";
  for (const GridRow& r : result.rows)
    os << io::formatNumber(r.config.lambdaM) << "," << io::formatNumber(r.config.lambdaA) << ","
       << io::formatNumber(r.config.lambdaPsi) << "," << io::formatNumber(r.wallSeconds) << "\n";
  return os.str();
}

}  // namespace glmm
