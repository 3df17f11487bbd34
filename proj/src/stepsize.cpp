#include "sonia/stepsize.hpp"

#include <cmath>
#include <stdexcept>

#include "sonia/linalg.hpp"

namespace sonia {

ArmijoResult armijo(const std::function<double(const std::vector<double>&)>& value_fn,
                    const std::vector<double>& w, const std::vector<double>& p,
                    const std::vector<double>& grad, double f0, const ArmijoParams& params) {
  if (!(params.c > 0.0 && params.c < 1.0) || !(params.tau > 0.0 && params.tau < 1.0) ||
      !(params.alpha0 > 0.0))
    throw std::invalid_argument("armijo: invalid parameters");
  const double gp = dot(grad, p);
  if (!(gp < 0.0)) throw std::invalid_argument("armijo: not a descent direction");

  ArmijoResult res;
  double alpha = params.alpha0;
  std::vector<double> trial(w.size());
  for (int t = 0; t < params.max_backtracks; ++t) {
    for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] + alpha * p[i];
    const double f = value_fn(trial);
    ++res.evals;
    if (std::isfinite(f) && f <= f0 + params.c * alpha * gp) {
      res.success = true;
      res.alpha = alpha;
      res.f_new = f;
      return res;
    }
    alpha *= params.tau;
  }
  return res;  // exhausted: success stays false
}

StepRule StepRule::fixed(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("fixed step: alpha must be positive");
  StepRule r;
  r.armijo_ = false;
  r.alpha_ = alpha;
  return r;
}

}  // namespace sonia
