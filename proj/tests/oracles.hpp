#pragma once

// Test-only reference computations, kept independent of the library's own
// factorization kernels on purpose: power iteration instead of Jacobi,
// finite differences instead of the closed forms, dense operator expansions
// instead of the implicit products.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sonia/linalg.hpp"
#include "sonia/optimizer.hpp"
#include "sonia/problems.hpp"

namespace oracles {

using sonia::Matrix;

inline double frob_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - b(i, j);
      s += d * d;
    }
  return std::sqrt(s);
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& eng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal(eng);
  return m;
}

inline Matrix random_symmetric(std::size_t n, std::mt19937_64& eng) {
  Matrix m = random_matrix(n, n, eng);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

/// Eigenvalues of a symmetric matrix by power iteration with Hotelling
/// deflation, sorted descending by value. Slow but entirely independent of
/// the Jacobi kernel under test.
inline std::vector<double> power_iteration_eigenvalues(Matrix a, int iters = 50000) {
  const std::size_t n = a.rows();
  std::vector<double> values;
  std::mt19937_64 eng(12345);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v(n);
    for (double& vi : v) vi = normal(eng);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
      std::vector<double> av = mat_vec(a, v);
      const double nrm = sonia::norm2(av);
      if (nrm == 0.0) break;  // exact zero eigenvalue (or deflated to zero)
      for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / nrm;
    }
    const std::vector<double> av = mat_vec(a, v);
    lambda = sonia::dot(v, av);  // Rayleigh quotient
    values.push_back(lambda);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) -= lambda * v[i] * v[j];
  }
  std::sort(values.begin(), values.end(), std::greater<double>());
  return values;
}

/// Cholesky-based positive-definiteness test (independent of sym_eig).
inline bool cholesky_pd(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) return false;
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

/// Dense d x d expansion of the truncated operator
///   A = Vtilde diag(inv_eig) Vtilde^T + rho (I - Vtilde Vtilde^T),
/// for small-dimension checks only.
inline Matrix dense_operator(const sonia::TruncatedOperator& op, std::size_t d) {
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i) a(i, i) = op.rho;
  for (std::size_t k = 0; k < op.memory(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = op.vtilde(i, k);
      for (std::size_t j = 0; j < d; ++j)
        a(i, j) += (op.inv_eig[k] - op.rho) * vik * op.vtilde(j, k);
    }
  }
  return a;
}

/// Dense expansion of the pre-truncation curvature approximation
/// B = Vtilde diag(raw_eig) Vtilde^T.
inline Matrix dense_b_matrix(const sonia::TruncatedOperator& op, std::size_t d) {
  Matrix b(d, d);
  for (std::size_t k = 0; k < op.memory(); ++k)
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = op.vtilde(i, k);
      for (std::size_t j = 0; j < d; ++j) b(i, j) += op.raw_eig[k] * vik * op.vtilde(j, k);
    }
  return b;
}

/// Central-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& w, double h) {
  std::vector<double> g(w.size());
  std::vector<double> x = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = w[i];
    x[i] = wi + h;
    const double fp = f(x);
    x[i] = wi - h;
    const double fm = f(x);
    x[i] = wi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central difference of a vector function along direction dir.
inline std::vector<double> fd_directional(
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    const std::vector<double>& w, const std::vector<double>& dir, double h) {
  std::vector<double> xp(w.size()), xm(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    xp[i] = w[i] + h * dir[i];
    xm[i] = w[i] - h * dir[i];
  }
  const std::vector<double> gp = grad(xp);
  const std::vector<double> gm = grad(xm);
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
  return out;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_rel_vec_err(const std::vector<double>& got, const std::vector<double>& want) {
  double scale = 0.0;
  for (double v : want) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1e-30);
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  return worst;
}

}  // namespace oracles
