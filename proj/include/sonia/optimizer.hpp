#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonia/linalg.hpp"
#include "sonia/problems.hpp"
#include "sonia/rng.hpp"
#include "sonia/run.hpp"
#include "sonia/stepsize.hpp"

namespace sonia {

/// Sampled curvature: directions S (d x m), their Hessian images Y = H S and
/// the cached block S^T Y (computed once, never rebuilt from S and Y).
struct CurvatureBlock {
  Matrix s;
  Matrix y;
  Matrix sty;
};

/// Complement scale rule. theory_min keeps rho within the range required by
/// the convergence analysis (at most the smallest inverse eigenvalue);
/// paper_max uses the largest inverse eigenvalue, the experimentally
/// preferred choice.
enum class RhoRule { theory_min, paper_max };

RhoRule rho_rule_from_string(const std::string& s);
const char* to_string(RhoRule r);

/// The truncated inverse curvature operator
///   A = Vtilde diag(inv_eig) Vtilde^T + rho (I - Vtilde Vtilde^T),
/// held implicitly: only the d x m basis and the m inverse eigenvalues are
/// stored, never a d x d matrix.
struct TruncatedOperator {
  Matrix vtilde;                // d x m, orthonormal columns (m may be zero)
  std::vector<double> inv_eig;  // 1 / max(|lambda_i|, eps), in (0, 1/eps]
  std::vector<double> raw_eig;  // eigenvalues before truncation
  double rho = 1.0;
  double eps = 0.0;

  std::size_t dim() const { return vtilde.rows(); }
  std::size_t memory() const { return vtilde.cols(); }
  double min_inv_eig() const;
};

/// Fresh i.i.d. standard Gaussian directions, d x m, reproducible by seed.
Matrix sample_directions(std::size_t d, std::size_t m, Rng& rng);

/// Assemble the truncated operator from a curvature block:
/// thin QR of Y, spectral decomposition of R (Y^T S)^+ R^T, basis Q V,
/// eigenvalue truncation at eps, complement scale from the chosen rule.
/// An empty block (m = 0) yields the pure scaled-steepest-descent operator
/// with rho = 1.
TruncatedOperator build_operator(const CurvatureBlock& block, double eps, RhoRule rule);

/// Orthogonal split of the gradient into the operator's subspace component
/// and its complement; g_par + g_perp reproduces the input by construction.
void decompose_gradient(const TruncatedOperator& op, const std::vector<double>& grad,
                        std::vector<double>* g_par, std::vector<double>* g_perp);

/// p = -Vtilde diag(inv_eig) Vtilde^T g - rho (I - Vtilde Vtilde^T) g,
/// computed with d x m products only.
std::vector<double> search_direction(const TruncatedOperator& op, const std::vector<double>& grad);

struct SoniaConfig {
  std::size_t memory = 0;
  double eps = 1e-5;
  RhoRule rho_rule = RhoRule::paper_max;
  StepRule step = StepRule::armijo_rule();
  std::int64_t max_iters = 1000;
  double gtol = 1e-8;
  // Stochastic driver only: gradient and curvature batch sizes.
  std::size_t batch_grad = 0;
  std::size_t batch_hess = 0;
  std::uint64_t seed = 0;
};

/// Full-batch driver: fresh directions each iteration, truncated-operator
/// step, Armijo or fixed step lengths, per-iteration trace.
RunResult run_deterministic(const Objective& obj, const SoniaConfig& cfg, std::vector<double> w0,
                            const RunHooks& hooks = {});

/// Mini-batch driver: independent gradient and curvature batches drawn
/// uniformly without replacement each iteration, fixed step length. The
/// trace carries full-objective values at epoch boundaries only; those
/// evaluations are not charged to the effective-pass ledger.
RunResult run_stochastic(const Objective& obj, const SoniaConfig& cfg, std::vector<double> w0,
                         const RunHooks& hooks = {});

}  // namespace sonia
