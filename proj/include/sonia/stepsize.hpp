#pragma once

#include <functional>
#include <vector>

namespace sonia {

struct ArmijoParams {
  double alpha0 = 1.0;
  double c = 1e-4;   // sufficient-decrease constant
  double tau = 0.5;  // backtracking factor
  int max_backtracks = 50;
};

struct ArmijoResult {
  bool success = false;
  double alpha = 0.0;
  double f_new = 0.0;  // objective at the accepted point
  int evals = 0;       // trial objective evaluations
};

/// Backtracking line search: shrink alpha until
/// F(w + alpha p) <= f0 + c * alpha * grad.p. Trials with non-finite values
/// count as failed decrease. The direction must be descent (grad.p < 0).
ArmijoResult armijo(const std::function<double(const std::vector<double>&)>& value_fn,
                    const std::vector<double>& w, const std::vector<double>& p,
                    const std::vector<double>& grad, double f0,
                    const ArmijoParams& params = {});

/// Step-length policy: Armijo backtracking or a constant step.
class StepRule {
 public:
  static StepRule armijo_rule(ArmijoParams params = {}) {
    StepRule r;
    r.armijo_ = true;
    r.params_ = params;
    return r;
  }
  static StepRule fixed(double alpha);

  bool is_armijo() const { return armijo_; }
  const ArmijoParams& armijo_params() const { return params_; }
  double fixed_alpha() const { return alpha_; }

 private:
  StepRule() = default;
  bool armijo_ = true;
  ArmijoParams params_;
  double alpha_ = 0.0;
};

}  // namespace sonia
