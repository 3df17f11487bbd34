#pragma once

#include <cstddef>
#include <vector>

namespace sonia {

/// Dense row-major matrix. The library only ever stores d-by-m or m-by-m
/// blocks (m is the optimizer memory), never anything d-by-d.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  /// Pointer to the start of row i (rows are contiguous).
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Small vector helpers shared across the library.
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);
bool all_finite(const std::vector<double>& a);

double frobenius_norm(const Matrix& m);

Matrix transpose(const Matrix& m);

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// y = A * x
std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x);
/// y = A^T * x
std::vector<double> mat_tvec(const Matrix& a, const std::vector<double>& x);

struct QrResult {
  Matrix q;  // rows(m) x cols(m) with orthonormal columns
  Matrix r;  // square upper-triangular, rows equal to cols(m)
};

/// Thin QR of a tall matrix (rows >= cols) by modified Gram-Schmidt with one
/// re-orthogonalization pass. Columns whose residual falls below
/// rank_tol * max column norm are treated as dependent: their R row is left
/// zero and the Q column is filled with a unit vector orthogonalized against
/// the rest, so Q always has a full set of orthonormal columns.
QrResult thin_qr(const Matrix& m, double rank_tol = 1e-10);

struct SymEig {
  Matrix vectors;              // orthogonal, eigenvectors in columns
  std::vector<double> values;  // sorted descending
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// The input is symmetrized as (M + M^T)/2 first; asymmetry beyond 1e-8
/// relative Frobenius is an error. Eigenvalues are sorted descending and each
/// eigenvector is sign-fixed so its first nonzero entry is positive, making
/// the output deterministic.
SymEig sym_eig(const Matrix& m);

/// Moore-Penrose pseudo-inverse of a symmetric matrix: eigenvalues with
/// |lambda| <= drop_tol * max|lambda| are dropped, the rest inverted.
Matrix pinv_sym(const Matrix& m, double drop_tol = 1e-12);

}  // namespace sonia
