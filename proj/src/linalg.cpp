#include "sonia/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sonia {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

bool all_finite(const std::vector<double>& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  const double* p = m.data();
  const std::size_t n = m.rows() * m.cols();
  for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != x.size()) throw std::invalid_argument("mat_vec: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> mat_tvec(const Matrix& a, const std::vector<double>& x) {
  if (a.rows() != x.size()) throw std::invalid_argument("mat_tvec: dimension mismatch");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * xi;
  }
  return y;
}

namespace {

// Column j of a into out (out must have a.rows() entries).
void get_col(const Matrix& a, std::size_t j, std::vector<double>& out) {
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = a(i, j);
}

void set_col(Matrix& a, std::size_t j, const std::vector<double>& v) {
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = v[i];
}

// v -= Q[:, cols] * (Q[:, cols]^T v); coefficients accumulated into coef.
void project_out(const Matrix& q, const std::vector<std::size_t>& cols,
                 std::vector<double>& v, std::vector<double>* coef) {
  for (std::size_t c : cols) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, c) * v[i];
    for (std::size_t i = 0; i < q.rows(); ++i) v[i] -= s * q(i, c);
    if (coef) (*coef)[c] += s;
  }
}

}  // namespace

QrResult thin_qr(const Matrix& m, double rank_tol) {
  const std::size_t d = m.rows();
  const std::size_t k = m.cols();
  if (k < 1 || d < k) throw std::invalid_argument("thin_qr: need rows >= cols >= 1");
  if (!m.all_finite()) throw std::invalid_argument("thin_qr: non-finite input");

  QrResult out{Matrix(d, k), Matrix(k, k)};
  std::vector<std::size_t> assigned;  // columns of Q already holding a basis vector
  std::vector<std::size_t> pending;   // dependent columns, filled afterwards
  assigned.reserve(k);

  double max_col_norm = 0.0;
  std::vector<double> v(d), coef(k);
  for (std::size_t j = 0; j < k; ++j) {
    get_col(m, j, v);
    max_col_norm = std::max(max_col_norm, norm2(v));
  }
  const double threshold = rank_tol * (max_col_norm > 0.0 ? max_col_norm : 1.0);

  for (std::size_t j = 0; j < k; ++j) {
    get_col(m, j, v);
    std::fill(coef.begin(), coef.end(), 0.0);
    project_out(out.q, assigned, v, &coef);
    project_out(out.q, assigned, v, &coef);  // re-orthogonalization pass
    const double rn = norm2(v);
    for (std::size_t c : assigned) out.r(c, j) = coef[c];
    if (rn <= threshold) {
      pending.push_back(j);  // R row j stays zero
      continue;
    }
    out.r(j, j) = rn;
    for (std::size_t i = 0; i < d; ++i) v[i] /= rn;
    set_col(out.q, j, v);
    assigned.push_back(j);
  }

  // Complete dependent directions with orthonormalized unit vectors. Since at
  // most 4*|assigned| coordinate axes can lose more than half their mass to
  // the current basis, a short scan always finds a safe candidate.
  for (std::size_t j : pending) {
    std::size_t pick = 0;
    double best_mass = 2.0;
    for (std::size_t i = 0; i < d; ++i) {
      double mass = 0.0;
      for (std::size_t c : assigned) mass += out.q(i, c) * out.q(i, c);
      if (mass < best_mass) {
        best_mass = mass;
        pick = i;
      }
      if (mass <= 0.25) break;
    }
    std::fill(v.begin(), v.end(), 0.0);
    v[pick] = 1.0;
    project_out(out.q, assigned, v, nullptr);
    project_out(out.q, assigned, v, nullptr);
    const double rn = norm2(v);
    for (std::size_t i = 0; i < d; ++i) v[i] /= rn;
    set_col(out.q, j, v);
    assigned.push_back(j);
  }
  return out;
}

SymEig sym_eig(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("sym_eig: matrix not square");
  if (!m.all_finite()) throw std::invalid_argument("sym_eig: non-finite input");

  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dlt = m(i, j) - m(j, i);
      asym += dlt * dlt;
    }
  asym = std::sqrt(asym);
  const double scale = std::max(1.0, frobenius_norm(m));
  if (asym / scale > 1e-8)
    throw std::invalid_argument("sym_eig: input asymmetric beyond tolerance");

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix vec = Matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double stop = 1e-15 * std::max(1.0, frobenius_norm(a));
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = vec(i, p), viq = vec(i, q);
          vec(i, p) = c * vip - s * viq;
          vec(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEig out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(vec(i, src)));
    double sign = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(vec(i, src)) > 1e-12 * max_abs) {
        sign = vec(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * vec(i, src);
  }
  return out;
}

Matrix pinv_sym(const Matrix& m, double drop_tol) {
  const SymEig eig = sym_eig(m);
  const std::size_t n = m.rows();
  double max_abs = 0.0;
  for (double v : eig.values) max_abs = std::max(max_abs, std::abs(v));
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(eig.values[k]) <= drop_tol * max_abs) continue;
    const double inv = 1.0 / eig.values[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = eig.vectors(i, k) * inv;
      if (vik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * eig.vectors(j, k);
    }
  }
  return out;
}

}  // namespace sonia
