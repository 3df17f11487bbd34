#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sonia {

struct TruncatedOperator;

/// One benchmark trace row. `passes` is the cumulative effective-pass count:
/// function, gradient and Hessian-column evaluations, each in units of one
/// full sweep over the training samples.
struct TraceRecord {
  std::int64_t iter = 0;
  double passes = 0.0;
  double f = 0.0;
  double gnorm = 0.0;
  double alpha = 0.0;
  double test_accuracy = 0.0;
};

/// Effective-pass ledger, in fractional sample-pass units.
struct EvalCounters {
  double value_passes = 0.0;
  double grad_passes = 0.0;
  double hess_col_passes = 0.0;
  double total() const { return value_passes + grad_passes + hess_col_passes; }
};

enum class TermReason { converged, max_iters, line_search_failed, non_finite };

const char* to_string(TermReason r);

struct OptState {
  std::vector<double> w;
  std::vector<double> grad;
  std::int64_t iter = 0;
  EvalCounters counters;
};

struct RunResult {
  OptState state;
  std::vector<TraceRecord> trace;
  TermReason reason = TermReason::max_iters;
  std::string message;
  double final_f = 0.0;
};

/// Per-iteration view handed to an observer; pointers are only valid during
/// the callback. `op` is null for optimizers without a truncated operator.
struct IterationInfo {
  std::int64_t iter = 0;
  const std::vector<double>* w = nullptr;
  const std::vector<double>* grad = nullptr;
  const TruncatedOperator* op = nullptr;
  const std::vector<double>* direction = nullptr;
  double alpha = 0.0;
  double f = 0.0;
};

struct RunHooks {
  /// Test accuracy reported in the trace; runs fall back to 0 when absent.
  std::function<double(const std::vector<double>&)> accuracy;
  /// Called once per completed iteration (after the step was chosen).
  std::function<void(const IterationInfo&)> observer;
};

}  // namespace sonia
