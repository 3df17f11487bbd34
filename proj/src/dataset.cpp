#include "sonia/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sonia/rng.hpp"

namespace sonia {

namespace {
constexpr double kDensityCutoff = 0.25;
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "logistic") return ProblemKind::logistic;
  if (s == "nlls") return ProblemKind::nlls;
  throw std::invalid_argument("unknown problem kind: " + s);
}

const char* to_string(ProblemKind k) {
  return k == ProblemKind::logistic ? "logistic" : "nlls";
}

Dataset Dataset::from_csr(std::size_t n, std::size_t d, std::vector<std::size_t> row_ptr,
                          std::vector<std::size_t> col_idx, std::vector<double> values,
                          std::vector<double> labels) {
  if (row_ptr.size() != n + 1 || col_idx.size() != values.size() || labels.size() != n)
    throw std::invalid_argument("Dataset::from_csr: inconsistent array sizes");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col_idx[k] >= d) throw std::invalid_argument("Dataset::from_csr: column index out of range");
      if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1])
        throw std::invalid_argument("Dataset::from_csr: column indices not strictly increasing");
      if (!std::isfinite(values[k])) throw std::invalid_argument("Dataset::from_csr: non-finite value");
    }
  }
  const double density = n * d == 0 ? 0.0 : static_cast<double>(values.size()) / (double(n) * double(d));
  if (density > kDensityCutoff) {
    std::vector<double> dense(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        dense[i * d + col_idx[k]] = values[k];
    return from_dense(n, d, std::move(dense), std::move(labels));
  }
  Dataset ds;
  ds.n_ = n;
  ds.d_ = d;
  ds.dense_ = false;
  ds.row_ptr_ = std::move(row_ptr);
  ds.col_idx_ = std::move(col_idx);
  ds.values_ = std::move(values);
  ds.labels_ = std::move(labels);
  return ds;
}

Dataset Dataset::from_dense(std::size_t n, std::size_t d, std::vector<double> values,
                            std::vector<double> labels) {
  if (values.size() != n * d || labels.size() != n)
    throw std::invalid_argument("Dataset::from_dense: inconsistent array sizes");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset::from_dense: non-finite value");
  Dataset ds;
  ds.n_ = n;
  ds.d_ = d;
  ds.dense_ = true;
  ds.values_ = std::move(values);
  ds.labels_ = std::move(labels);
  return ds;
}

double Dataset::row_dot(std::size_t i, const std::vector<double>& w) const {
  double s = 0.0;
  if (dense_) {
    const double* xi = values_.data() + i * d_;
    for (std::size_t j = 0; j < d_; ++j) s += xi[j] * w[j];
  } else {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * w[col_idx_[k]];
  }
  return s;
}

void Dataset::add_scaled_row(std::size_t i, double coef, std::vector<double>& out) const {
  if (dense_) {
    const double* xi = values_.data() + i * d_;
    for (std::size_t j = 0; j < d_; ++j) out[j] += coef * xi[j];
  } else {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[col_idx_[k]] += coef * values_[k];
  }
}

void Dataset::row_times_mat(std::size_t i, const double* s, std::size_t m, double* z) const {
  for (std::size_t j = 0; j < m; ++j) z[j] = 0.0;
  if (dense_) {
    const double* xi = values_.data() + i * d_;
    for (std::size_t c = 0; c < d_; ++c) {
      const double v = xi[c];
      if (v == 0.0) continue;
      const double* sc = s + c * m;
      for (std::size_t j = 0; j < m; ++j) z[j] += v * sc[j];
    }
  } else {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const double v = values_[k];
      const double* sc = s + col_idx_[k] * m;
      for (std::size_t j = 0; j < m; ++j) z[j] += v * sc[j];
    }
  }
}

void Dataset::add_scaled_row_mat(std::size_t i, const double* coefs, std::size_t m, double* out) const {
  if (dense_) {
    const double* xi = values_.data() + i * d_;
    for (std::size_t c = 0; c < d_; ++c) {
      const double v = xi[c];
      if (v == 0.0) continue;
      double* oc = out + c * m;
      for (std::size_t j = 0; j < m; ++j) oc[j] += v * coefs[j];
    }
  } else {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const double v = values_[k];
      double* oc = out + col_idx_[k] * m;
      for (std::size_t j = 0; j < m; ++j) oc[j] += v * coefs[j];
    }
  }
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
  std::vector<double> labels(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = labels_[idx[i]];
  if (dense_) {
    std::vector<double> values(idx.size() * d_);
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy_n(values_.data() + idx[i] * d_, d_, values.data() + i * d_);
    return from_dense(idx.size(), d_, std::move(values), std::move(labels));
  }
  std::vector<std::size_t> row_ptr{0}, col_idx;
  std::vector<double> values;
  for (std::size_t r : idx) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      col_idx.push_back(col_idx_[k]);
      values.push_back(values_[k]);
    }
    row_ptr.push_back(col_idx.size());
  }
  return from_csr(idx.size(), d_, std::move(row_ptr), std::move(col_idx), std::move(values),
                  std::move(labels));
}

Dataset Dataset::relabeled(ProblemKind kind) const {
  std::set<double> distinct(labels_.begin(), labels_.end());
  if (distinct.size() > 2) throw std::invalid_argument("relabeled: more than two distinct labels");
  const double lo = kind == ProblemKind::logistic ? -1.0 : 0.0;
  const double hi = 1.0;
  const double smallest = *distinct.begin();
  Dataset ds = *this;
  if (distinct.size() == 2) {
    for (double& y : ds.labels_) y = (y == smallest) ? lo : hi;
  } else {
    const double mapped = smallest <= 0.0 ? lo : hi;
    for (double& y : ds.labels_) y = mapped;
  }
  return ds;
}

double Dataset::density() const {
  if (n_ == 0 || d_ == 0) return 0.0;
  return dense_ ? 1.0 : static_cast<double>(values_.size()) / (double(n_) * double(d_));
}

namespace {

struct ParsedRecord {
  double label;
  std::vector<std::pair<std::size_t, double>> pairs;  // 1-based indices
};

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("libsvm parse error at line " + std::to_string(line_no) + ": " + what);
}

bool parse_double(const char* s, const char* end, double* out) {
  char* stop = nullptr;
  *out = std::strtod(s, &stop);
  return stop == end && std::isfinite(*out);
}

}  // namespace

Dataset parse_libsvm(std::istream& in, ProblemKind kind, std::size_t d_override) {
  std::vector<ParsedRecord> records;
  std::set<double> raw_labels;
  std::size_t max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;

    std::istringstream ls(line.substr(start));
    std::string token;
    if (!(ls >> token)) continue;

    ParsedRecord rec;
    if (!parse_double(token.c_str(), token.c_str() + token.size(), &rec.label))
      parse_fail(line_no, "bad label token '" + token + "'");

    std::size_t prev_index = 0;
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
        parse_fail(line_no, "bad feature token '" + token + "'");
      char* stop = nullptr;
      const unsigned long long raw_idx = std::strtoull(token.c_str(), &stop, 10);
      if (stop != token.c_str() + colon || raw_idx == 0)
        parse_fail(line_no, "bad feature index in '" + token + "'");
      double value;
      if (!parse_double(token.c_str() + colon + 1, token.c_str() + token.size(), &value))
        parse_fail(line_no, "bad feature value in '" + token + "'");
      if (raw_idx <= prev_index) parse_fail(line_no, "feature indices not strictly increasing");
      prev_index = raw_idx;
      rec.pairs.emplace_back(static_cast<std::size_t>(raw_idx), value);
    }
    max_index = std::max(max_index, prev_index);
    raw_labels.insert(rec.label);
    if (raw_labels.size() > 2) parse_fail(line_no, "more than two distinct labels");
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw std::runtime_error("libsvm parse error: empty dataset");

  std::size_t d = max_index;
  if (d_override > 0) {
    if (max_index > d_override)
      throw std::runtime_error("libsvm parse error: feature index " + std::to_string(max_index) +
                               " exceeds requested dimension " + std::to_string(d_override));
    d = d_override;
  }
  if (d == 0) throw std::runtime_error("libsvm parse error: no features present");

  std::vector<std::size_t> row_ptr{0}, col_idx;
  std::vector<double> values, labels;
  labels.reserve(records.size());
  for (const ParsedRecord& rec : records) {
    for (const auto& [idx, value] : rec.pairs) {
      col_idx.push_back(idx - 1);
      values.push_back(value);
    }
    row_ptr.push_back(col_idx.size());
    labels.push_back(rec.label);
  }
  Dataset ds = Dataset::from_csr(records.size(), d, std::move(row_ptr), std::move(col_idx),
                                 std::move(values), std::move(labels));
  return ds.relabeled(kind);
}

namespace {

bool is_gzip(const std::string& head) {
  return head.size() >= 2 && static_cast<unsigned char>(head[0]) == 0x1f &&
         static_cast<unsigned char>(head[1]) == 0x8b;
}

std::string gunzip(const std::string& raw) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw std::runtime_error("gzip: inflateInit failed");
  std::string out;
  out.resize(std::max<std::size_t>(raw.size() * 4, 1 << 16));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
  zs.avail_in = static_cast<uInt>(raw.size());
  std::size_t written = 0;
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    zs.avail_out = static_cast<uInt>(out.size() - written);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw std::runtime_error("gzip: corrupt stream");
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

Dataset load_libsvm(const std::string& path, ProblemKind kind, std::size_t d_override) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (is_gzip(raw)) raw = gunzip(raw);
  std::istringstream in(raw);
  return parse_libsvm(in, kind, d_override);
}

void serialize_libsvm(const Dataset& ds, std::ostream& out) {
  char buf[64];
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.labels()[i]);
    out << buf;
    if (ds.dense_) {
      for (std::size_t j = 0; j < ds.cols(); ++j) {
        std::snprintf(buf, sizeof buf, " %zu:%.17g", j + 1, ds.values_[i * ds.cols() + j]);
        out << buf;
      }
    } else {
      for (std::size_t k = ds.row_ptr_[i]; k < ds.row_ptr_[i + 1]; ++k) {
        std::snprintf(buf, sizeof buf, " %zu:%.17g", ds.col_idx_[k] + 1, ds.values_[k]);
        out << buf;
      }
    }
    out << '\n';
  }
}

void save_libsvm(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  serialize_libsvm(ds, f);
}

Dataset synth_logistic(std::size_t n, std::size_t d, double kappa, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("synth_logistic: n, d must be positive");
  if (kappa < 1.0) throw std::invalid_argument("synth_logistic: kappa must be >= 1");
  Rng rng(seed);

  std::vector<double> planted(d);
  for (double& v : planted) v = rng.gaussian();

  std::vector<double> scales(d, 1.0);
  for (std::size_t j = 0; j < d && d > 1; ++j)
    scales[j] = std::pow(kappa, static_cast<double>(j) / static_cast<double>(d - 1));

  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) values[i * d + j] = rng.gaussian() * scales[j];

  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += values[i * d + j] * planted[j];
    double y = z >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < 0.1) y = -y;  // label noise
    labels[i] = y;
  }
  return Dataset::from_dense(n, d, std::move(values), std::move(labels));
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split: fraction must be in (0, 1)");
  const std::size_t n = ds.rows();
  if (n < 2) throw std::invalid_argument("split: need at least two rows");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.integer(i + 1)]);

  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * double(n)));
  n_test = std::min(std::max<std::size_t>(n_test, 1), n - 1);

  std::vector<std::size_t> test_idx(perm.begin(), perm.begin() + n_test);
  std::vector<std::size_t> train_idx(perm.begin() + n_test, perm.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {ds.select_rows(train_idx), ds.select_rows(test_idx)};
}

}  // namespace sonia
