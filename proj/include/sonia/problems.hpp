#pragma once

#include <memory>
#include <vector>

#include "sonia/dataset.hpp"
#include "sonia/linalg.hpp"

namespace sonia {

/// Problem definition: which loss, which regularizer, which data.
/// lambda is the l2 coefficient for logistic regression; the nonlinear
/// least-squares objective carries no regularizer, so lambda must be zero.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::logistic;
  double lambda = 0.0;
  std::shared_ptr<const Dataset> data;

  ProblemSpec() = default;
  ProblemSpec(ProblemKind k, double lam, std::shared_ptr<const Dataset> ds);
};

/// Sample subset: null means the full sample range [0, n).
using IndexSet = std::vector<std::size_t>;

/// Objective interface the optimizers run against: mean loss over selected
/// samples with value, gradient and Hessian-matrix products.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_samples() const = 0;
  virtual double value(const std::vector<double>& w, const IndexSet* idx = nullptr) const = 0;
  virtual std::vector<double> gradient(const std::vector<double>& w,
                                       const IndexSet* idx = nullptr) const = 0;
  /// Columns of the result are Hessian products with the columns of s (d x m).
  virtual Matrix hess_mat(const std::vector<double>& w, const Matrix& s,
                          const IndexSet* idx = nullptr) const = 0;
};

/// Empirical-risk objective over a Dataset (logistic regression or nonlinear
/// least squares, closed-form products throughout).
class ErmObjective final : public Objective {
 public:
  explicit ErmObjective(ProblemSpec spec);

  std::size_t dim() const override { return spec_.data->cols(); }
  std::size_t num_samples() const override { return spec_.data->rows(); }
  double value(const std::vector<double>& w, const IndexSet* idx = nullptr) const override;
  std::vector<double> gradient(const std::vector<double>& w,
                               const IndexSet* idx = nullptr) const override;
  Matrix hess_mat(const std::vector<double>& w, const Matrix& s,
                  const IndexSet* idx = nullptr) const override;

  const ProblemSpec& spec() const { return spec_; }

 private:
  void check_inputs(const std::vector<double>& w, const IndexSet* idx) const;

  ProblemSpec spec_;
};

std::unique_ptr<Objective> make_objective(const ProblemSpec& spec);

struct CurvatureProducts {
  Matrix y;    // d x m
  Matrix sty;  // m x m, S^T Y
};

/// Sharded curvature construction: every shard computes its local Hessian
/// products and S^T Y block, the results are reduced by sample-weighted
/// summation in ascending shard order. The shards must partition [0, n)
/// exactly. Equals the monolithic hess_mat up to summation order.
CurvatureProducts partitioned_hess_block(const ErmObjective& obj, const std::vector<double>& w,
                                         const Matrix& s,
                                         const std::vector<IndexSet>& shards);

/// Fraction of correctly classified samples under the linear predictor:
/// sign(x.w) against +-1 labels for logistic, thresholded sigmoid against
/// 0/1 labels for nonlinear least squares.
double classification_accuracy(const Dataset& ds, ProblemKind kind, const std::vector<double>& w);

// Numerically safe scalar kernels (exposed for tests).
double stable_sigmoid(double z);
double stable_log1p_exp_neg(double t);  // log(1 + exp(-t)) without overflow

}  // namespace sonia
