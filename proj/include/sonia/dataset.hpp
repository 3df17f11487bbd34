#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace sonia {

enum class ProblemKind { logistic, nlls };

ProblemKind problem_kind_from_string(const std::string& s);
const char* to_string(ProblemKind k);

/// Immutable sample matrix X (n x d) plus labels. Rows are stored CSR when
/// the data is sparse and as a plain dense block otherwise (cutoff: 25%
/// density). Construction is the only mutation point.
class Dataset {
 public:
  /// Build from CSR triplets; switches to dense storage above the density
  /// cutoff. Column indices must be strictly increasing within each row.
  static Dataset from_csr(std::size_t n, std::size_t d, std::vector<std::size_t> row_ptr,
                          std::vector<std::size_t> col_idx, std::vector<double> values,
                          std::vector<double> labels);

  /// Build from a dense row-major n x d block.
  static Dataset from_dense(std::size_t n, std::size_t d, std::vector<double> values,
                            std::vector<double> labels);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  bool is_dense() const { return dense_; }
  const std::vector<double>& labels() const { return labels_; }
  double label(std::size_t i) const { return labels_[i]; }

  /// x_i . w
  double row_dot(std::size_t i, const std::vector<double>& w) const;
  /// out += coef * x_i
  void add_scaled_row(std::size_t i, double coef, std::vector<double>& out) const;
  /// z = x_i . s_j for every column j of the row-major d x m block s.
  void row_times_mat(std::size_t i, const double* s, std::size_t m, double* z) const;
  /// out(d x m, row-major) += x_i outer coefs(m)
  void add_scaled_row_mat(std::size_t i, const double* coefs, std::size_t m, double* out) const;

  /// New dataset with the selected rows, in the given order.
  Dataset select_rows(const std::vector<std::size_t>& idx) const;

  /// Labels remapped for the given problem kind: the smaller of the two
  /// distinct raw values maps to -1 (logistic) or 0 (nlls), the larger to
  /// +1 / 1.
  Dataset relabeled(ProblemKind kind) const;

  /// Fraction of stored entries (1.0 for dense storage).
  double density() const;

 private:
  Dataset() = default;

  std::size_t n_ = 0, d_ = 0;
  bool dense_ = false;
  // CSR storage
  std::vector<std::size_t> row_ptr_, col_idx_;
  std::vector<double> values_;  // doubles as the dense block when dense_
  std::vector<double> labels_;

  friend void serialize_libsvm(const Dataset&, std::ostream&);
};

/// Parse LIBSVM text ("label idx:val idx:val ..."); blank lines and lines
/// starting with '#' are skipped. Labels are remapped for the problem kind.
/// d_override widens the feature dimension beyond the largest index seen
/// (0 means use the largest index).
Dataset parse_libsvm(std::istream& in, ProblemKind kind, std::size_t d_override = 0);

/// File loader; .gz payloads are decompressed transparently.
Dataset load_libsvm(const std::string& path, ProblemKind kind, std::size_t d_override = 0);

void serialize_libsvm(const Dataset& ds, std::ostream& out);
void save_libsvm(const Dataset& ds, const std::string& path);

/// Synthetic binary classification data: Gaussian features with per-column
/// scales log-spaced in [1, kappa], labels +-1 from a planted weight vector
/// with 10% label noise.
Dataset synth_logistic(std::size_t n, std::size_t d, double kappa, std::uint64_t seed);

/// Seeded shuffle split into (train, test); test gets round(n * fraction)
/// rows, clamped so both parts are nonempty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

}  // namespace sonia
