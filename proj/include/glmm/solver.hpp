#pragma once

// Alternating minimization for the generalized linear mixing model
//
//   J(A, M, Psi) = 1/2 sum_n ( ||r_n - M_n a_n||^2 + lambda_M ||M_n - M0 .* Psi_n||_F^2 )
//                + lambda_A ( ||H_h(A)||_{2,1} + ||H_v(A)||_{2,1} )
//                + lambda_Psi / 2 sum_{l,k} ( ||H_h(Psi_lk)||^2 + ||H_v(Psi_lk)||^2 )
//
// with A column-stochastic. Each outer iteration updates M (closed form per
// pixel, then clipped at zero), A (ADMM) and Psi (per-fiber BCCB solve via the
// 2-D DFT), in that order. Restricting Psi_n to band-constant columns gives
// the ELMM.

#include "glmm/core.hpp"
#include "glmm/fft.hpp"
#include "glmm/gradient.hpp"
#include "glmm/least_squares.hpp"
#include "glmm/proximal.hpp"

#include <functional>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

namespace glmm {

enum class PsiMode { Full, BandConstant };

inline std::string psiModeName(PsiMode m) { return m == PsiMode::Full ? "full" : "band_constant"; }

struct GlmmConfig {
  double lambdaM = 1.0;
  double lambdaA = 0.01;
  double lambdaPsi = 1e-3;
  double admmRho = 1.0;
  int admmIters = 100;
  /// ADMM stops early once RMS primal and dual residuals both fall below this.
  double admmTol = 1e-4;
  int outerIters = 50;
  double tolRel = 1e-4;
  PsiMode psiMode = PsiMode::Full;
  /// Carry ADMM splitting variables and duals across outer iterations.
  bool admmWarmStart = true;

  void validate() const {
    auto finiteNonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    detail::require(finiteNonneg(lambdaM) && finiteNonneg(lambdaA) && finiteNonneg(lambdaPsi),
                    "GlmmConfig: regularization weights must be finite and nonnegative");
    detail::require(std::isfinite(admmRho) && admmRho > 0.0, "GlmmConfig: admm_rho must be positive");
    detail::require(admmIters > 0, "GlmmConfig: admm_iters must be positive");
    detail::require(outerIters >= 0, "GlmmConfig: outer_iters must be nonnegative");
    detail::require(std::isfinite(tolRel) && tolRel > 0.0, "GlmmConfig: tol_rel must be positive");
    detail::require(admmTol >= 0.0, "GlmmConfig: admm_tol must be nonnegative");
  }
};

// ---------------------------------------------------------------------------
// Cost terms

template <typename Scalar>
double dataFit(const HsiCube<Scalar>& cube, const PixelEndmemberTensor<Scalar>& m,
               const Matrix<Scalar>& a) {
  double total = 0.0;
  for (Index n = 0; n < cube.pixels(); ++n)
    total += static_cast<double>((cube.pixel(n) - m.slice(n) * a.col(n)).squaredNorm());
  return 0.5 * total;
}

/// 1/2 sum_n ||M_n - M0 .* Psi_n||_F^2 (without lambda_M).
template <typename Scalar>
double endmemberFidelity(const PixelEndmemberTensor<Scalar>& m, const EndmemberMatrix<Scalar>& m0,
                         const ScalingTensor<Scalar>& psi) {
  const Eigen::Map<const Vector<Scalar>> m0v(m0.data().data(), m0.data().size());
  const Matrix<Scalar> diff = m.flat() - (psi.flat().array().colwise() * m0v.array()).matrix();
  return 0.5 * static_cast<double>(diff.squaredNorm());
}

/// ||H_h(A)||_{2,1} + ||H_v(A)||_{2,1} (without lambda_A).
template <typename Derived>
double abundanceTotalVariation(const GradientPair& grad, const Eigen::MatrixBase<Derived>& a) {
  return static_cast<double>(normL21(grad.horizontal.applyToLayers(a)) +
                             normL21(grad.vertical.applyToLayers(a)));
}

/// 1/2 sum_{l,k} ||H_h(Psi_lk)||^2 + ||H_v(Psi_lk)||^2 (without lambda_Psi).
template <typename Scalar>
double scalingRoughness(const GradientPair& grad, const ScalingTensor<Scalar>& psi) {
  return 0.5 * static_cast<double>(grad.horizontal.applyToLayers(psi.flat()).squaredNorm() +
                                   grad.vertical.applyToLayers(psi.flat()).squaredNorm());
}

/// Full objective J. The indicator and sum-to-one terms vanish for feasible
/// A; an infeasible A is rejected instead of being assigned an infinite cost.
template <typename Scalar>
double evaluateCost(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0,
                    const Matrix<Scalar>& a, const PixelEndmemberTensor<Scalar>& m,
                    const ScalingTensor<Scalar>& psi, const GlmmConfig& config) {
  detail::require(a.rows() == m0.count() && a.cols() == cube.pixels() &&
                      m.pixels() == cube.pixels() && psi.pixels() == cube.pixels() &&
                      m.bands() == cube.bands() && psi.bands() == cube.bands(),
                  "evaluateCost: inconsistent dimensions");
  const std::string problem = AbundanceMatrix<Scalar>::violation(a);
  if (!problem.empty()) throw std::invalid_argument("evaluateCost: infeasible abundances: " + problem);
  const GradientPair grad(cube.grid());
  return dataFit(cube, m, a) + config.lambdaM * endmemberFidelity(m, m0, psi) +
         config.lambdaA * abundanceTotalVariation(grad, a) +
         config.lambdaPsi * scalingRoughness(grad, psi);
}

// ---------------------------------------------------------------------------
// M-update

/// Minimizer of 1/2||r - M a||^2 + lambda/2 ||M - Z||_F^2 over unconstrained
/// M, i.e. (r a' + lambda Z)(a a' + lambda I)^{-1}, evaluated through the
/// rank-one identity M = Z + (r - Z a) a' / (lambda + a'a).
template <typename Scalar, typename RDerived, typename ADerived>
Matrix<Scalar> solveEndmemberPixel(const Eigen::MatrixBase<RDerived>& r,
                                   const Eigen::MatrixBase<ADerived>& alpha,
                                   const Matrix<Scalar>& z, Scalar lambda) {
  const Scalar energy = alpha.squaredNorm();
  if (!(lambda > Scalar(0)) && (alpha.size() > 1 || energy == Scalar(0)))
    throw std::domain_error(
        "updateM: a a' + lambda_M I is singular (lambda_M = 0 with a rank-one Gram matrix)");
  const Vector<Scalar> residual = r - z * alpha;
  return z + residual * alpha.transpose() / (lambda + energy);
}

/// Per-pixel closed-form M update before the nonnegativity projection, as an
/// (L*R) x N flat matrix.
template <typename Scalar>
Matrix<Scalar> updateMUnprojected(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0,
                                  const AbundanceMatrix<Scalar>& a, const ScalingTensor<Scalar>& psi,
                                  double lambdaM) {
  detail::require(cube.bands() == m0.bands() && a.count() == m0.count() &&
                      a.pixels() == cube.pixels() && psi.pixels() == cube.pixels(),
                  "updateM: inconsistent dimensions");
  const Index nb = m0.bands(), nr = m0.count();
  Matrix<Scalar> flat(nb * nr, cube.pixels());
  Matrix<Scalar> z(nb, nr);
  for (Index n = 0; n < cube.pixels(); ++n) {
    z = m0.data().cwiseProduct(psi.slice(n));
    const Matrix<Scalar> mn =
        solveEndmemberPixel<Scalar>(cube.pixel(n), a.data().col(n), z, Scalar(lambdaM));
    flat.col(n) = Eigen::Map<const Vector<Scalar>>(mn.data(), mn.size());
  }
  return flat;
}

template <typename Scalar>
PixelEndmemberTensor<Scalar> updateM(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0,
                                     const AbundanceMatrix<Scalar>& a,
                                     const ScalingTensor<Scalar>& psi, double lambdaM) {
  Matrix<Scalar> flat = updateMUnprojected(cube, m0, a, psi, lambdaM);
  return PixelEndmemberTensor<Scalar>(m0.bands(), m0.count(), flat.cwiseMax(Scalar(0)));
}

// ---------------------------------------------------------------------------
// A-update

/// Splitting variables and scaled duals of the abundance ADMM.
template <typename Scalar = double>
struct AdmmState {
  Matrix<Scalar> v1, v2, v3, v4;
  Matrix<Scalar> u1, u2, u3, u4;

  bool matches(Index rows, Index cols) const { return v3.rows() == rows && v3.cols() == cols; }
};

template <typename Scalar = double>
struct AdmmResult {
  AbundanceMatrix<Scalar> abundances;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  /// True when the final iterate did not improve on the incoming one and the
  /// incoming abundances were returned instead.
  bool keptInitial = false;
};

/// 1/2 sum_n ||r_n - M_n a_n||^2 + lambda_A TV(A).
template <typename Scalar>
double abundanceObjective(const HsiCube<Scalar>& cube, const PixelEndmemberTensor<Scalar>& m,
                          const Matrix<Scalar>& a, double lambdaA, const GradientPair& grad) {
  return dataFit(cube, m, a) + lambdaA * abundanceTotalVariation(grad, a);
}

/// Abundance subproblem
///
///   min_A 1/2 sum_n ||r_n - M_n a_n||^2 + lambda_A (||H_h A||_{2,1} + ||H_v A||_{2,1})
///   s.t.  every column of A on the unit simplex
///
/// by ADMM on X with V1 = H_h X, V2 = H_v X, V3 = X (simplex), V4 = X (data
/// term). The X step is a BCCB solve with (H_h'H_h + H_v'H_v + 2I); V1, V2
/// are l2,1 shrinkages over the R materials of each pixel edge; V3 is a
/// simplex projection; V4 is a per-pixel R x R solve. The returned abundances
/// are V3, or the incoming iterate if that has lower objective.
template <typename Scalar>
AdmmResult<Scalar> updateA(const HsiCube<Scalar>& cube, const PixelEndmemberTensor<Scalar>& m,
                           const AbundanceMatrix<Scalar>& aInit, double lambdaA, double rho,
                           int iters, double tol = 1e-4, AdmmState<Scalar>* warm = nullptr) {
  detail::require(m.pixels() == cube.pixels() && m.bands() == cube.bands() &&
                      aInit.count() == m.count() && aInit.pixels() == cube.pixels(),
                  "updateA: inconsistent dimensions");
  detail::require(rho > 0.0 && iters > 0 && lambdaA >= 0.0, "updateA: invalid ADMM parameters");
  const Index nr = m.count(), np = cube.pixels();
  const GridShape grid = cube.grid();
  const GradientPair grad(grid);
  const Scalar r = Scalar(rho);

  // Per-pixel (M_n'M_n + rho I)^{-1} and M_n'r_n.
  Matrix<Scalar> gramInv(nr, nr * np), proj(nr, np);
  for (Index n = 0; n < np; ++n) {
    const auto mn = m.slice(n);
    Matrix<Scalar> g = mn.transpose() * mn;
    g.diagonal().array() += r;
    gramInv.block(0, n * nr, nr, nr) = g.llt().solve(Matrix<Scalar>::Identity(nr, nr));
    proj.col(n) = mn.transpose() * cube.pixel(n);
  }
  Vector<Scalar> eig = gradientGramEigenvalues<Scalar>(grid);
  eig.array() += Scalar(2);
  CirculantSolver<Scalar> circulant(grid);

  AdmmState<Scalar> local;
  AdmmState<Scalar>& s = warm ? *warm : local;
  if (!s.matches(nr, np)) {
    const Matrix<Scalar>& a0 = aInit.data();
    s.v1 = grad.horizontal.applyToLayers(a0);
    s.v2 = grad.vertical.applyToLayers(a0);
    s.v3 = a0;
    s.v4 = a0;
    s.u1 = s.u2 = s.u3 = s.u4 = Matrix<Scalar>::Zero(nr, np);
  }

  const Scalar shrink = Scalar(lambdaA / rho);
  const double count = 4.0 * double(nr * np);
  Matrix<Scalar> x(nr, np), hx1, hx2, rhs(nr, np);
  bool converged = false;
  int it = 0;
  for (it = 1; it <= iters; ++it) {
    x = grad.horizontal.adjointToLayers(s.v1 - s.u1) + grad.vertical.adjointToLayers(s.v2 - s.u2) +
        (s.v3 - s.u3) + (s.v4 - s.u4);
    circulant.solveRows(x, eig);

    hx1 = grad.horizontal.applyToLayers(x);
    hx2 = grad.vertical.applyToLayers(x);
    const Matrix<Scalar> v1 = proxL21(hx1 + s.u1, shrink);
    const Matrix<Scalar> v2 = proxL21(hx2 + s.u2, shrink);
    const Matrix<Scalar> v3 = projectSimplexColumns(x + s.u3);
    rhs = proj + r * (x + s.u4);
    Matrix<Scalar> v4(nr, np);
    for (Index n = 0; n < np; ++n) {
      const Scalar* g = gramInv.data() + n * nr * nr;
      const Scalar* b = rhs.data() + n * nr;
      Scalar* out = v4.data() + n * nr;
      for (Index i = 0; i < nr; ++i) {
        Scalar acc = 0;
        for (Index j = 0; j < nr; ++j) acc += g[i + j * nr] * b[j];
        out[i] = acc;
      }
    }

    const double dual = double(r) * std::sqrt(double((v1 - s.v1).squaredNorm() + (v2 - s.v2).squaredNorm() +
                                                     (v3 - s.v3).squaredNorm() + (v4 - s.v4).squaredNorm()));
    s.v1 = v1;
    s.v2 = v2;
    s.v3 = v3;
    s.v4 = v4;
    const Matrix<Scalar> p1 = hx1 - s.v1, p2 = hx2 - s.v2, p3 = x - s.v3, p4 = x - s.v4;
    s.u1 += p1;
    s.u2 += p2;
    s.u3 += p3;
    s.u4 += p4;
    const double primal = std::sqrt(double(p1.squaredNorm() + p2.squaredNorm() + p3.squaredNorm() +
                                           p4.squaredNorm()));
    if (primal / std::sqrt(count) < tol && dual / std::sqrt(count) < tol) {
      converged = true;
      break;
    }
  }

  AdmmResult<Scalar> out;
  out.converged = converged;
  out.iterations = std::min(it, iters);
  const double fInit = abundanceObjective(cube, m, aInit.data(), lambdaA, grad);
  Matrix<Scalar> candidate = s.v3;
  for (Index n = 0; n < np; ++n) candidate.col(n) /= candidate.col(n).sum();
  const double fFinal = abundanceObjective(cube, m, candidate, lambdaA, grad);
  if (fFinal <= fInit) {
    out.abundances = AbundanceMatrix<Scalar>(std::move(candidate));
    out.objective = fFinal;
  } else {
    out.abundances = aInit;
    out.objective = fInit;
    out.keptInitial = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Psi-update

/// Least-squares Psi before the clamp at zero, as an (L*R) x N flat matrix.
/// Full mode solves, per (l, k) fiber,
///   (lambda_M m0_lk^2 I + lambda_Psi (H_h'H_h + H_v'H_v)) psi = lambda_M m0_lk M_lk
/// by diagonalizing the BCCB operator with the 2-D DFT. Band-constant mode
/// solves the same problem restricted to Psi_n columns constant over bands.
template <typename Scalar>
Matrix<Scalar> updatePsiUnclamped(const PixelEndmemberTensor<Scalar>& m,
                                  const EndmemberMatrix<Scalar>& m0, GridShape grid,
                                  double lambdaM, double lambdaPsi, PsiMode mode,
                                  std::vector<std::string>* warnings = nullptr) {
  detail::require(m.bands() == m0.bands() && m.count() == m0.count() && m.pixels() == grid.pixels(),
                  "updatePsi: inconsistent dimensions");
  detail::require(lambdaM > 0.0, "updatePsi: lambda_M must be positive");
  detail::require(lambdaPsi >= 0.0, "updatePsi: lambda_Psi must be nonnegative");
  const Index nb = m0.bands(), nr = m0.count(), np = grid.pixels();
  const Scalar lm = Scalar(lambdaM), lp = Scalar(lambdaPsi);
  const Vector<Scalar> spectrum = gradientGramEigenvalues<Scalar>(grid);
  CirculantSolver<Scalar> circulant(grid);
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };

  if (mode == PsiMode::Full) {
    // One column per (l, k) fiber so every image is contiguous.
    Matrix<Scalar> images = m.flat().transpose();
    Vector<Scalar> diag(nb * nr);
    for (Index k = 0; k < nr; ++k) {
      for (Index l = 0; l < nb; ++l) {
        const Index row = l + nb * k;
        const Scalar w = m0.data()(l, k);
        diag[row] = lm * w * w;
        images.col(row) *= lm * w;
        if (w == Scalar(0)) {
          warn("updatePsi: M0(" + std::to_string(l) + "," + std::to_string(k) +
               ") is zero; scaling fiber is unidentifiable and set to one");
          diag[row] = Scalar(1);  // placeholder, overwritten below
        }
      }
    }
    if (lp == Scalar(0)) {
      for (Index row = 0; row < nb * nr; ++row) images.col(row) /= diag[row];
    } else {
      // Rows are requested in pairs, so alternate between two buffers.
      Vector<Scalar> denom[2] = {Vector<Scalar>(np), Vector<Scalar>(np)};
      circulant.solveColumnsWith(images, [&](Index row) -> const Vector<Scalar>& {
        Vector<Scalar>& d = denom[row % 2];
        d = (diag[row] + lp * spectrum.array()).matrix();
        return d;
      });
    }
    for (Index k = 0; k < nr; ++k)
      for (Index l = 0; l < nb; ++l)
        if (m0.data()(l, k) == Scalar(0)) images.col(l + nb * k).setOnes();
    return images.transpose();
  }

  // Band-constant: one scalar field per endmember.
  Matrix<Scalar> fields(nr, np);
  Vector<Scalar> energy(nr);
  for (Index k = 0; k < nr; ++k) {
    energy[k] = lm * m0.data().col(k).squaredNorm();
    fields.row(k).setZero();
    for (Index l = 0; l < nb; ++l) fields.row(k) += lm * m0.data()(l, k) * m.fiber(l, k);
  }
  if (lp == Scalar(0)) {
    for (Index k = 0; k < nr; ++k) fields.row(k) /= energy[k];
  } else {
    const Scalar bandsWeight = lp * Scalar(nb);
    circulant.solveRowsWith(fields, [&](Index k) -> Vector<Scalar> {
      return (energy[k] + bandsWeight * spectrum.array()).matrix();
    });
  }
  Matrix<Scalar> out(nb * nr, np);
  for (Index k = 0; k < nr; ++k) out.block(k * nb, 0, nb, np) = fields.row(k).replicate(nb, 1);
  return out;
}

template <typename Scalar>
ScalingTensor<Scalar> updatePsi(const PixelEndmemberTensor<Scalar>& m,
                                const EndmemberMatrix<Scalar>& m0, GridShape grid, double lambdaM,
                                double lambdaPsi, PsiMode mode,
                                std::vector<std::string>* warnings = nullptr) {
  Matrix<Scalar> flat = updatePsiUnclamped(m, m0, grid, lambdaM, lambdaPsi, mode, warnings);
  return ScalingTensor<Scalar>(m0.bands(), m0.count(), flat.cwiseMax(Scalar(0)));
}

// ---------------------------------------------------------------------------
// Outer loop

template <typename Scalar = double>
struct SolverState {
  AbundanceMatrix<Scalar> a;
  PixelEndmemberTensor<Scalar> m;
  ScalingTensor<Scalar> psi;
  /// J after each completed outer iteration.
  std::vector<double> costHistory;
  /// J at the initialization, with M = M0 .* Psi0.
  double initialCost = 0.0;
  int iterationsRun = 0;
  bool converged = false;
  /// Per outer iteration: whether the inner ADMM met its residual tolerance.
  std::vector<bool> admmConverged;
  std::vector<std::string> warnings;
};

namespace detail {

inline double relativeChange(double diffNorm, double refNorm) {
  return diffNorm / std::max(refNorm, 1e-300);
}

template <typename F>
auto runBlock(const char* block, int iteration, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("glmmUnmix: ") + block + " failed at outer iteration " +
                             std::to_string(iteration) + ": " + e.what());
  }
}

}  // namespace detail

/// Alternating minimization of J over (M, A, Psi). A starts from `a0` or the
/// SCLS abundances, Psi from `psi0` or all ones. Stops after
/// `config.outerIters` iterations or when the relative Frobenius change of
/// every block drops below `config.tolRel`.
template <typename Scalar>
SolverState<Scalar> glmmUnmix(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0,
                              const GlmmConfig& config,
                              std::optional<AbundanceMatrix<std::type_identity_t<Scalar>>> a0 = std::nullopt,
                              std::optional<ScalingTensor<std::type_identity_t<Scalar>>> psi0 = std::nullopt) {
  config.validate();
  detail::require(cube.bands() == m0.bands(), "glmmUnmix: cube and M0 band counts differ");
  const Index nb = m0.bands(), nr = m0.count(), np = cube.pixels();

  SolverState<Scalar> st;
  st.a = a0 ? *a0 : scls(cube, m0).abundances;
  st.psi = psi0 ? *psi0 : ScalingTensor<Scalar>::ones(nb, nr, np);
  detail::require(st.a.count() == nr && st.a.pixels() == np, "glmmUnmix: A0 dimensions mismatch");
  detail::require(st.psi.bands() == nb && st.psi.count() == nr && st.psi.pixels() == np,
                  "glmmUnmix: Psi0 dimensions mismatch");
  st.m = scaleEndmembers(m0, st.psi);
  st.initialCost = evaluateCost(cube, m0, st.a.data(), st.m, st.psi, config);

  AdmmState<Scalar> admm;
  for (int i = 1; i <= config.outerIters; ++i) {
    auto m = detail::runBlock("M-update", i,
                              [&] { return updateM(cube, m0, st.a, st.psi, config.lambdaM); });
    auto admmResult = detail::runBlock("A-update", i, [&] {
      return updateA(cube, m, st.a, config.lambdaA, config.admmRho, config.admmIters,
                     config.admmTol, config.admmWarmStart ? &admm : nullptr);
    });
    auto psi = detail::runBlock("Psi-update", i, [&] {
      return updatePsi(m, m0, cube.grid(), config.lambdaM, config.lambdaPsi, config.psiMode,
                       i == 1 ? &st.warnings : nullptr);
    });

    const double dA = detail::relativeChange((admmResult.abundances.data() - st.a.data()).norm(),
                                             st.a.data().norm());
    const double dM = detail::relativeChange((m.flat() - st.m.flat()).norm(), st.m.flat().norm());
    const double dPsi =
        detail::relativeChange((psi.flat() - st.psi.flat()).norm(), st.psi.flat().norm());

    st.a = std::move(admmResult.abundances);
    st.m = std::move(m);
    st.psi = std::move(psi);
    st.admmConverged.push_back(admmResult.converged);
    st.costHistory.push_back(evaluateCost(cube, m0, st.a.data(), st.m, st.psi, config));
    st.iterationsRun = i;
    if (!std::isfinite(st.costHistory.back()))
      throw std::runtime_error("glmmUnmix: non-finite cost at outer iteration " + std::to_string(i));
    if (std::max({dA, dM, dPsi}) < config.tolRel) {
      st.converged = true;
      break;
    }
  }
  return st;
}

}  // namespace glmm
