#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "sonia/problems.hpp"
#include "sonia/run.hpp"
#include "sonia/stepsize.hpp"

namespace sonia {

/// L-BFGS correction-pair store with the standard curvature guard:
/// pairs with s.y <= guard * |s||y| are skipped.
class LbfgsMemory {
 public:
  explicit LbfgsMemory(std::size_t capacity, double guard = 1e-8);

  bool add(const std::vector<double>& s, const std::vector<double>& y);
  /// Two-loop recursion for H g with H0 = gamma I, gamma = s.y / y.y from the
  /// newest pair; returns g itself when no pairs are stored.
  std::vector<double> apply(const std::vector<double>& g) const;
  std::size_t size() const { return pairs_.size(); }
  void clear() { pairs_.clear(); }

 private:
  struct Pair {
    std::vector<double> s, y;
    double rho;  // 1 / s.y
  };
  std::size_t capacity_;
  double guard_;
  std::deque<Pair> pairs_;  // oldest first
};

RunResult gd_run(const Objective& obj, const StepRule& step, std::vector<double> w0,
                 std::int64_t max_iters, double gtol = 1e-8, const RunHooks& hooks = {});

RunResult lbfgs_run(const Objective& obj, std::size_t memory, const StepRule& step,
                    std::vector<double> w0, std::int64_t max_iters, double gtol = 1e-8,
                    const RunHooks& hooks = {});

/// Plain mini-batch SGD: w <- w - alpha grad_I(w), epoch-boundary trace.
RunResult sgd_run(const Objective& obj, double alpha, std::size_t batch, std::vector<double> w0,
                  std::int64_t epochs, std::uint64_t seed, const RunHooks& hooks = {});

}  // namespace sonia
