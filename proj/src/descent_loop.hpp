#pragma once

// Internal: the shared full-batch descent loop. SONIA, gradient descent and
// L-BFGS all run through this exact code path so that reductions between
// them (e.g. zero-memory SONIA vs scaled steepest descent) agree bitwise.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sonia/linalg.hpp"
#include "sonia/problems.hpp"
#include "sonia/run.hpp"
#include "sonia/stepsize.hpp"

namespace sonia::detail {

// Provider contract:
//   const TruncatedOperator* direction(iter, w, grad, counters, p_out);
//   void after_step(w_old, g_old, w_new, g_new);
template <typename Provider>
RunResult descent_loop(const Objective& obj, const StepRule& step, std::vector<double> w0,
                       std::int64_t max_iters, double gtol, const RunHooks& hooks,
                       Provider&& provider) {
  const std::size_t d = obj.dim();
  if (w0.size() != d) throw std::invalid_argument("run: w0 has wrong dimension");
  if (!all_finite(w0)) throw std::invalid_argument("run: w0 is non-finite");
  if (max_iters < 0) throw std::invalid_argument("run: negative iteration budget");

  RunResult out;
  EvalCounters& cnt = out.state.counters;

  std::vector<double> w = std::move(w0);
  std::vector<double> g = obj.gradient(w);
  cnt.grad_passes += 1.0;
  double f = obj.value(w);
  // The initial value is the first line-search baseline; under a fixed step
  // it is trace-only and stays off the ledger.
  if (step.is_armijo()) cnt.value_passes += 1.0;

  std::vector<double> p, w_old, g_old;
  bool done = false;
  for (std::int64_t k = 0; !done; ++k) {
    const double row_passes = cnt.total();
    const double gnorm = norm2(g);
    const double acc = hooks.accuracy ? hooks.accuracy(w) : 0.0;

    auto finish = [&](TermReason reason, std::string msg) {
      out.trace.push_back({k, row_passes, f, gnorm, 0.0, acc});
      out.reason = reason;
      out.message = std::move(msg);
      done = true;
    };

    if (!std::isfinite(f) || !all_finite(g)) {
      finish(TermReason::non_finite,
             "non-finite objective or gradient at iteration " + std::to_string(k));
      break;
    }
    if (gnorm <= gtol) {
      finish(TermReason::converged, "");
      break;
    }
    if (k >= max_iters) {
      finish(TermReason::max_iters, "");
      break;
    }

    const TruncatedOperator* op = provider.direction(k, w, g, cnt, p);
    const double gp = dot(g, p);
    if (!(gp < 0.0)) {
      finish(TermReason::line_search_failed, "direction is not a descent direction");
      break;
    }

    double alpha;
    double f_next;
    if (step.is_armijo()) {
      const ArmijoResult ls = armijo([&](const std::vector<double>& x) { return obj.value(x); },
                                     w, p, g, f, step.armijo_params());
      cnt.value_passes += static_cast<double>(ls.evals);
      if (!ls.success) {
        finish(TermReason::line_search_failed,
               "line search exhausted backtracks at iteration " + std::to_string(k));
        break;
      }
      alpha = ls.alpha;
      f_next = ls.f_new;
    } else {
      alpha = step.fixed_alpha();
      f_next = 0.0;  // recomputed below
    }

    out.trace.push_back({k, row_passes, f, gnorm, alpha, acc});
    if (hooks.observer) hooks.observer(IterationInfo{k, &w, &g, op, &p, alpha, f});

    w_old = w;
    g_old = g;
    for (std::size_t i = 0; i < d; ++i) w[i] += alpha * p[i];
    g = obj.gradient(w);
    cnt.grad_passes += 1.0;
    // Fixed-step trace values are informational and stay off the ledger.
    f = step.is_armijo() ? f_next : obj.value(w);
    provider.after_step(w_old, g_old, w, g);
    out.state.iter = k + 1;
  }

  out.final_f = out.trace.back().f;
  out.state.w = std::move(w);
  out.state.grad = std::move(g);
  return out;
}

}  // namespace sonia::detail
