#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonia/dataset.hpp"
#include "sonia/optimizer.hpp"

namespace sonia {

struct SynthSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  double kappa = 1.0;
};

/// One benchmark invocation: problem + data source + optimizer + hyper-grid.
/// Grid values are kept as strings and parsed per key when a cell is
/// instantiated.
struct ExperimentConfig {
  ProblemKind problem = ProblemKind::logistic;
  std::string data_path;           // mutually exclusive with synth
  std::optional<SynthSpec> synth;
  std::size_t dim_override = 0;
  double lambda = 1e-3;

  std::string optimizer = "sonia";  // sonia | gd | lbfgs | sgd
  std::size_t memory = 64;          // clamped to the data dimension
  double eps = 1e-5;
  RhoRule rho_rule = RhoRule::paper_max;
  bool armijo = true;
  double fixed_alpha = 0.1;
  // batch_grad > 0 selects the stochastic driver for sonia and sets the sgd
  // batch; 0 means full-batch deterministic.
  std::size_t batch_grad = 0;
  std::size_t batch_hess = 0;

  std::int64_t epochs = 50;  // iteration budget for deterministic optimizers
  double gtol = 1e-8;
  double test_fraction = 0.2;
  std::vector<std::uint64_t> seeds{0};
  std::map<std::string, std::vector<std::string>> grid;

  std::string out_dir = "traces";
  int workers = 1;
  bool allow_divergence = false;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

struct CellResult {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  std::string trace_file;
  double final_f = 0.0;
  double final_gnorm = 0.0;
  double final_test_accuracy = 0.0;
  std::string reason;   // termination reason or error text
  bool failed = false;  // diverged or errored
  double wall_ms = 0.0;
};

struct ExperimentReport {
  bool all_ok = true;
  std::string manifest_path;
  std::vector<CellResult> results;
};

/// Expand the grid, run every (cell, seed) pair (in parallel up to
/// cfg.workers), write one trace CSV per run plus a per-optimizer JSON
/// manifest. Identical config and seeds reproduce the CSVs byte for byte.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct ReferenceOptimum {
  double fstar = 0.0;
  bool exact = false;  // gradient tolerance reached
};

/// High-accuracy reference value: an L-BFGS run with memory 64, gtol 1e-12
/// and a 10^4-iteration cap, stopped early once the objective stagnates at
/// the numerical floor. exact reports whether the gradient tolerance was
/// actually reached.
ReferenceOptimum compute_reference_optimum(const Objective& obj);

/// Guarded variant for benchmark problems: requires strong convexity
/// (logistic with lambda > 0).
ReferenceOptimum compute_reference_optimum(const ErmObjective& obj);

/// Aggregate the traces in a directory into a per-optimizer table:
/// effective passes to optimality gaps {1e-2, 1e-4, 1e-6} plus final test
/// accuracy. Returns the rendered text table and writes summary.csv.
std::string emit_summary(const std::string& trace_dir);

/// Version string embedded in manifests.
const char* version_string();

}  // namespace sonia
