#pragma once

// Per-pixel constrained least squares: FCLS (simplex) and SCLS (nonnegative,
// then factored into scale times simplex point).
//
// Both solvers work on the Gram form min 1/2 x'Gx - c'x with G = M'M and
// c = M'r and use primal active-set iterations, which terminate at the exact
// optimum for positive definite G.

#include "glmm/core.hpp"

#include <vector>

namespace glmm {

namespace detail {

template <typename Scalar>
Scalar activeSetTolerance(const Matrix<Scalar>& g, const Vector<Scalar>& c) {
  const Scalar scale = std::max(g.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff());
  return Scalar(1e-13) * std::max(scale, Scalar(1e-300));
}

template <typename Scalar>
void requireFullColumnRank(const Matrix<Scalar>& m, const char* who) {
  require(m.rows() >= m.cols(), std::string(who) + ": need at least as many bands as endmembers");
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(m);
  if (qr.rank() < m.cols())
    throw std::invalid_argument(std::string(who) + ": M0 is rank deficient (rank " +
                                std::to_string(qr.rank()) + " < " + std::to_string(m.cols()) + ")");
}

}  // namespace detail

/// argmin 1/2 x'Gx - c'x subject to x >= 0 and sum(x) = 1.
template <typename Scalar>
Vector<Scalar> simplexQp(const Matrix<Scalar>& g, const Vector<Scalar>& c) {
  const Index r = c.size();
  const Scalar tol = detail::activeSetTolerance(g, c);
  Vector<Scalar> x = Vector<Scalar>::Constant(r, Scalar(1) / Scalar(r));
  std::vector<bool> free(static_cast<std::size_t>(r), true);

  for (int iter = 0; iter < 10 * int(r) + 50; ++iter) {
    std::vector<Index> idx;
    for (Index i = 0; i < r; ++i)
      if (free[i]) idx.push_back(i);
    const Index f = static_cast<Index>(idx.size());

    // Equality-constrained subproblem on the free set.
    Matrix<Scalar> kkt = Matrix<Scalar>::Zero(f + 1, f + 1);
    Vector<Scalar> rhs(f + 1);
    for (Index a = 0; a < f; ++a) {
      for (Index b = 0; b < f; ++b) kkt(a, b) = g(idx[a], idx[b]);
      kkt(a, f) = kkt(f, a) = Scalar(1);
      rhs[a] = c[idx[a]];
    }
    rhs[f] = Scalar(1);
    const Vector<Scalar> sol = kkt.partialPivLu().solve(rhs);
    const Vector<Scalar> z = sol.head(f);
    const Scalar nu = sol[f];

    if (z.minCoeff() >= Scalar(0)) {
      x.setZero();
      for (Index a = 0; a < f; ++a) x[idx[a]] = z[a];
      const Vector<Scalar> grad = g * x - c;
      Index enter = -1;
      Scalar worst = -tol;
      for (Index i = 0; i < r; ++i) {
        if (free[i]) continue;
        const Scalar lambda = grad[i] + nu;
        if (lambda < worst) {
          worst = lambda;
          enter = i;
        }
      }
      if (enter < 0) return x;
      free[enter] = true;
    } else {
      // Step toward z until the first free coordinate hits zero.
      Scalar step = Scalar(1);
      Index blocking = -1;
      for (Index a = 0; a < f; ++a) {
        const Index i = idx[a];
        if (z[a] < Scalar(0) && x[i] / (x[i] - z[a]) < step) {
          step = x[i] / (x[i] - z[a]);
          blocking = i;
        }
      }
      for (Index a = 0; a < f; ++a) x[idx[a]] += step * (z[a] - x[idx[a]]);
      for (Index a = 0; a < f; ++a) {
        const Index i = idx[a];
        if (i == blocking || x[i] <= Scalar(0)) {
          x[i] = Scalar(0);
          free[i] = false;
        }
      }
      x /= x.sum();
    }
  }
  return x;
}

/// argmin 1/2 x'Gx - c'x subject to x >= 0 (Lawson-Hanson).
template <typename Scalar>
Vector<Scalar> nnlsQp(const Matrix<Scalar>& g, const Vector<Scalar>& c) {
  const Index r = c.size();
  const Scalar tol = detail::activeSetTolerance(g, c);
  Vector<Scalar> x = Vector<Scalar>::Zero(r);
  std::vector<bool> passive(static_cast<std::size_t>(r), false);

  for (int outer = 0; outer < 10 * int(r) + 50; ++outer) {
    const Vector<Scalar> w = c - g * x;
    Index enter = -1;
    Scalar best = tol;
    for (Index i = 0; i < r; ++i)
      if (!passive[i] && w[i] > best) {
        best = w[i];
        enter = i;
      }
    if (enter < 0) break;
    passive[enter] = true;

    for (int inner = 0; inner < 10 * int(r) + 50; ++inner) {
      std::vector<Index> idx;
      for (Index i = 0; i < r; ++i)
        if (passive[i]) idx.push_back(i);
      const Index p = static_cast<Index>(idx.size());
      Matrix<Scalar> gp(p, p);
      Vector<Scalar> cp(p);
      for (Index a = 0; a < p; ++a) {
        for (Index b = 0; b < p; ++b) gp(a, b) = g(idx[a], idx[b]);
        cp[a] = c[idx[a]];
      }
      const Vector<Scalar> z = gp.ldlt().solve(cp);
      if (z.minCoeff() > Scalar(0)) {
        x.setZero();
        for (Index a = 0; a < p; ++a) x[idx[a]] = z[a];
        break;
      }
      Scalar step = Scalar(1);
      Index blocking = -1;
      for (Index a = 0; a < p; ++a) {
        const Index i = idx[a];
        if (z[a] <= Scalar(0) && x[i] / (x[i] - z[a]) < step) {
          step = x[i] / (x[i] - z[a]);
          blocking = i;
        }
      }
      for (Index a = 0; a < p; ++a) {
        const Index i = idx[a];
        x[i] += step * (z[a] - x[i]);
        if (i == blocking || x[i] <= Scalar(0)) {
          x[i] = Scalar(0);
          passive[i] = false;
        }
      }
    }
  }
  return x;
}

/// Fully constrained least squares: per pixel, argmin ||r_n - M0 a||^2 over
/// the unit simplex.
template <typename Scalar>
AbundanceMatrix<Scalar> fcls(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0) {
  detail::require(cube.bands() == m0.bands(), "fcls: cube and M0 band counts differ");
  detail::requireFullColumnRank(m0.data(), "fcls");
  const Matrix<Scalar> g = m0.data().transpose() * m0.data();
  const Matrix<Scalar> c = m0.data().transpose() * cube.data();
  Matrix<Scalar> a(m0.count(), cube.pixels());
  for (Index n = 0; n < cube.pixels(); ++n) a.col(n) = simplexQp<Scalar>(g, c.col(n));
  return AbundanceMatrix<Scalar>(std::move(a));
}

template <typename Scalar = double>
struct SclsResult {
  AbundanceMatrix<Scalar> abundances;
  Vector<Scalar> scales;           // s_n = sum(beta_n)
  std::vector<Index> degenerate;   // pixels with beta_n = 0 (abundances set uniform)
};

/// Scaled constrained least squares: per pixel NNLS beta, then beta = s * a
/// with s = sum(beta) and a on the simplex.
template <typename Scalar>
SclsResult<Scalar> scls(const HsiCube<Scalar>& cube, const EndmemberMatrix<Scalar>& m0) {
  detail::require(cube.bands() == m0.bands(), "scls: cube and M0 band counts differ");
  detail::requireFullColumnRank(m0.data(), "scls");
  const Matrix<Scalar> g = m0.data().transpose() * m0.data();
  const Matrix<Scalar> c = m0.data().transpose() * cube.data();
  const Index nr = m0.count();
  Matrix<Scalar> a(nr, cube.pixels());
  Vector<Scalar> s(cube.pixels());
  std::vector<Index> degenerate;
  for (Index n = 0; n < cube.pixels(); ++n) {
    const Vector<Scalar> beta = nnlsQp<Scalar>(g, c.col(n));
    s[n] = beta.sum();
    if (s[n] > Scalar(0)) {
      a.col(n) = beta / s[n];
    } else {
      a.col(n).setConstant(Scalar(1) / Scalar(nr));
      s[n] = Scalar(0);
      degenerate.push_back(n);
    }
  }
  return {AbundanceMatrix<Scalar>(std::move(a)), std::move(s), std::move(degenerate)};
}

}  // namespace glmm
