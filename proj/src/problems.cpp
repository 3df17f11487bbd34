#include "sonia/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace sonia {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_log1p_exp_neg(double t) {
  // log(1 + e^{-t}); the naive form overflows for t < -709.
  if (t >= 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

ProblemSpec::ProblemSpec(ProblemKind k, double lam, std::shared_ptr<const Dataset> ds)
    : kind(k), lambda(lam), data(std::move(ds)) {
  if (!data) throw std::invalid_argument("ProblemSpec: null dataset");
  if (lambda < 0.0) throw std::invalid_argument("ProblemSpec: lambda must be nonnegative");
  if (kind == ProblemKind::nlls && lambda != 0.0)
    throw std::invalid_argument("ProblemSpec: nlls carries no regularizer, lambda must be 0");
}

ErmObjective::ErmObjective(ProblemSpec spec) : spec_(std::move(spec)) {
  if (!spec_.data) throw std::invalid_argument("ErmObjective: null dataset");
}

void ErmObjective::check_inputs(const std::vector<double>& w, const IndexSet* idx) const {
  if (w.size() != dim()) throw std::invalid_argument("objective: w has wrong dimension");
  if (!all_finite(w)) throw std::invalid_argument("objective: non-finite iterate");
  if (idx) {
    if (idx->empty()) throw std::invalid_argument("objective: empty index set");
    for (std::size_t i : *idx)
      if (i >= num_samples()) throw std::invalid_argument("objective: sample index out of range");
  }
}

namespace {

// Iterate the selected samples in the order given (or 0..n-1 when null).
template <typename Fn>
void for_each_sample(std::size_t n, const IndexSet* idx, Fn&& fn) {
  if (idx) {
    for (std::size_t i : *idx) fn(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

std::size_t selected_count(std::size_t n, const IndexSet* idx) { return idx ? idx->size() : n; }

}  // namespace

double ErmObjective::value(const std::vector<double>& w, const IndexSet* idx) const {
  check_inputs(w, idx);
  const Dataset& ds = *spec_.data;
  const double count = static_cast<double>(selected_count(ds.rows(), idx));
  double sum = 0.0;
  if (spec_.kind == ProblemKind::logistic) {
    for_each_sample(ds.rows(), idx, [&](std::size_t i) {
      const double t = ds.label(i) * ds.row_dot(i, w);
      sum += stable_log1p_exp_neg(t);
    });
    double reg = 0.0;
    for (double wi : w) reg += wi * wi;
    return sum / count + 0.5 * spec_.lambda * reg;
  }
  for_each_sample(ds.rows(), idx, [&](std::size_t i) {
    const double r = ds.label(i) - stable_sigmoid(ds.row_dot(i, w));
    sum += r * r;
  });
  return sum / (2.0 * count);
}

std::vector<double> ErmObjective::gradient(const std::vector<double>& w, const IndexSet* idx) const {
  check_inputs(w, idx);
  const Dataset& ds = *spec_.data;
  const double count = static_cast<double>(selected_count(ds.rows(), idx));
  std::vector<double> g(dim(), 0.0);
  if (spec_.kind == ProblemKind::logistic) {
    for_each_sample(ds.rows(), idx, [&](std::size_t i) {
      const double y = ds.label(i);
      const double t = y * ds.row_dot(i, w);
      ds.add_scaled_row(i, -y * stable_sigmoid(-t), g);
    });
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] / count + spec_.lambda * w[j];
    return g;
  }
  for_each_sample(ds.rows(), idx, [&](std::size_t i) {
    const double phi = stable_sigmoid(ds.row_dot(i, w));
    ds.add_scaled_row(i, -phi * (1.0 - phi) * (ds.label(i) - phi), g);
  });
  for (double& gj : g) gj /= count;
  return g;
}

Matrix ErmObjective::hess_mat(const std::vector<double>& w, const Matrix& s,
                              const IndexSet* idx) const {
  check_inputs(w, idx);
  if (s.rows() != dim()) throw std::invalid_argument("hess_mat: direction block has wrong row count");
  if (!s.all_finite()) throw std::invalid_argument("hess_mat: non-finite directions");
  const Dataset& ds = *spec_.data;
  const std::size_t m = s.cols();
  const double count = static_cast<double>(selected_count(ds.rows(), idx));

  Matrix out(dim(), m);
  std::vector<double> z(m);
  for_each_sample(ds.rows(), idx, [&](std::size_t i) {
    const double zi = ds.row_dot(i, w);
    double h;
    if (spec_.kind == ProblemKind::logistic) {
      const double y = ds.label(i);
      const double t = y * zi;
      h = y * y * stable_sigmoid(t) * stable_sigmoid(-t);
    } else {
      const double y = ds.label(i);
      const double phi = stable_sigmoid(zi);
      h = -phi * (1.0 - phi) * (y - 2.0 * (1.0 + y) * phi + 3.0 * phi * phi);
    }
    if (h == 0.0) return;
    ds.row_times_mat(i, s.data(), m, z.data());
    for (double& zj : z) zj *= h;
    ds.add_scaled_row_mat(i, z.data(), m, out.data());
  });

  const double lambda = spec_.kind == ProblemKind::logistic ? spec_.lambda : 0.0;
  double* o = out.data();
  const double* sp = s.data();
  for (std::size_t k = 0; k < dim() * m; ++k) o[k] = o[k] / count + lambda * sp[k];
  return out;
}

std::unique_ptr<Objective> make_objective(const ProblemSpec& spec) {
  return std::make_unique<ErmObjective>(spec);
}

CurvatureProducts partitioned_hess_block(const ErmObjective& obj, const std::vector<double>& w,
                                         const Matrix& s, const std::vector<IndexSet>& shards) {
  const std::size_t n = obj.num_samples();
  if (shards.empty()) throw std::invalid_argument("partitioned_hess_block: need at least one shard");

  std::vector<char> seen(n, 0);
  std::size_t covered = 0;
  for (const IndexSet& shard : shards) {
    if (shard.empty()) throw std::invalid_argument("partitioned_hess_block: empty shard");
    for (std::size_t i : shard) {
      if (i >= n || seen[i]) throw std::invalid_argument("partitioned_hess_block: overlapping shards");
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n) throw std::invalid_argument("partitioned_hess_block: shards do not cover all samples");

  CurvatureProducts acc{Matrix(s.rows(), s.cols()), Matrix(s.cols(), s.cols())};
  for (const IndexSet& shard : shards) {  // fixed ascending shard order
    const double weight = static_cast<double>(shard.size()) / static_cast<double>(n);
    const Matrix y_local = obj.hess_mat(w, s, &shard);
    const Matrix sty_local = matmul_tn(s, y_local);
    double* yp = acc.y.data();
    const double* ylp = y_local.data();
    for (std::size_t k = 0; k < s.rows() * s.cols(); ++k) yp[k] += weight * ylp[k];
    double* stp = acc.sty.data();
    const double* stlp = sty_local.data();
    for (std::size_t k = 0; k < s.cols() * s.cols(); ++k) stp[k] += weight * stlp[k];
  }
  return acc;
}

double classification_accuracy(const Dataset& ds, ProblemKind kind, const std::vector<double>& w) {
  if (ds.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const double z = ds.row_dot(i, w);
    if (kind == ProblemKind::logistic) {
      const double pred = z >= 0.0 ? 1.0 : -1.0;
      if (pred == ds.label(i)) ++correct;
    } else {
      const double pred = z >= 0.0 ? 1.0 : 0.0;
      if (pred == ds.label(i)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.rows());
}

}  // namespace sonia
