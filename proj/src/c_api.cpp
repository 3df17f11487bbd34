#include "sonia.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonia/baselines.hpp"
#include "sonia/dataset.hpp"
#include "sonia/experiment.hpp"
#include "sonia/optimizer.hpp"
#include "sonia/problems.hpp"

struct sonia_dataset {
  std::shared_ptr<const sonia::Dataset> ds;
};

struct sonia_problem {
  sonia::ProblemSpec spec;
  std::unique_ptr<sonia::ErmObjective> obj;
};

struct sonia_result {
  sonia::RunResult res;
};

namespace {

thread_local std::string g_last_error;

sonia_status fail(sonia_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
sonia_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(SONIA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SONIA_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(SONIA_ERR_UNKNOWN, "unknown error");
  }
}

sonia::ProblemKind to_kind(int k) {
  switch (k) {
    case SONIA_PROBLEM_LOGISTIC: return sonia::ProblemKind::logistic;
    case SONIA_PROBLEM_NLLS: return sonia::ProblemKind::nlls;
  }
  throw std::invalid_argument("bad problem kind");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sonia_version(void) { return sonia::version_string(); }

const char* sonia_last_error(void) { return g_last_error.c_str(); }

sonia_status sonia_dataset_load_libsvm(const char* path, int problem_kind, size_t dim_override,
                                       sonia_dataset** out) {
  return guarded([&]() {
    if (!path || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    auto ds = std::make_shared<const sonia::Dataset>(
        sonia::load_libsvm(path, to_kind(problem_kind), dim_override));
    *out = new sonia_dataset{std::move(ds)};
    return SONIA_OK;
  });
}

sonia_status sonia_dataset_parse_libsvm(const char* text, int problem_kind, size_t dim_override,
                                        sonia_dataset** out) {
  return guarded([&]() {
    if (!text || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    std::istringstream in{std::string(text)};
    auto ds = std::make_shared<const sonia::Dataset>(
        sonia::parse_libsvm(in, to_kind(problem_kind), dim_override));
    *out = new sonia_dataset{std::move(ds)};
    return SONIA_OK;
  });
}

sonia_status sonia_dataset_save_libsvm(const sonia_dataset* ds, const char* path) {
  return guarded([&]() {
    if (!ds || !path) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    sonia::save_libsvm(*ds->ds, path);
    return SONIA_OK;
  });
}

sonia_status sonia_dataset_synth_logistic(size_t n, size_t d, double kappa, uint64_t seed,
                                          int problem_kind, sonia_dataset** out) {
  return guarded([&]() {
    if (!out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    sonia::Dataset raw = sonia::synth_logistic(n, d, kappa, seed);
    auto ds = std::make_shared<const sonia::Dataset>(raw.relabeled(to_kind(problem_kind)));
    *out = new sonia_dataset{std::move(ds)};
    return SONIA_OK;
  });
}

sonia_status sonia_dataset_split(const sonia_dataset* ds, double test_fraction, uint64_t seed,
                                 sonia_dataset** train, sonia_dataset** test) {
  return guarded([&]() {
    if (!ds || !train || !test) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    auto [tr, te] = sonia::split(*ds->ds, test_fraction, seed);
    auto train_handle = std::make_unique<sonia_dataset>(
        sonia_dataset{std::make_shared<const sonia::Dataset>(std::move(tr))});
    auto test_handle = std::make_unique<sonia_dataset>(
        sonia_dataset{std::make_shared<const sonia::Dataset>(std::move(te))});
    *train = train_handle.release();
    *test = test_handle.release();
    return SONIA_OK;
  });
}

size_t sonia_dataset_rows(const sonia_dataset* ds) { return ds ? ds->ds->rows() : 0; }

size_t sonia_dataset_cols(const sonia_dataset* ds) { return ds ? ds->ds->cols() : 0; }

void sonia_dataset_destroy(sonia_dataset* ds) { delete ds; }

sonia_status sonia_problem_create(const sonia_dataset* ds, int problem_kind, double lambda,
                                  sonia_problem** out) {
  return guarded([&]() {
    if (!ds || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    sonia::ProblemSpec spec(to_kind(problem_kind), lambda, ds->ds);
    auto p = std::make_unique<sonia_problem>();
    p->spec = spec;
    p->obj = std::make_unique<sonia::ErmObjective>(spec);
    *out = p.release();
    return SONIA_OK;
  });
}

void sonia_problem_destroy(sonia_problem* p) { delete p; }

sonia_status sonia_problem_value(const sonia_problem* p, const double* w, size_t len,
                                 double* out) {
  return guarded([&]() {
    if (!p || !w || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    std::vector<double> wv(w, w + len);
    *out = p->obj->value(wv);
    return SONIA_OK;
  });
}

sonia_status sonia_problem_gradient(const sonia_problem* p, const double* w, size_t len,
                                    double* out) {
  return guarded([&]() {
    if (!p || !w || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    std::vector<double> wv(w, w + len);
    const std::vector<double> g = p->obj->gradient(wv);
    std::memcpy(out, g.data(), g.size() * sizeof(double));
    return SONIA_OK;
  });
}

void sonia_run_options_init(sonia_run_options* opts) {
  if (!opts) return;
  opts->optimizer = SONIA_OPT_SONIA;
  opts->memory = 64;
  opts->eps = 1e-5;
  opts->rho_rule = SONIA_RHO_PAPER_MAX;
  opts->step_kind = SONIA_STEP_ARMIJO;
  opts->alpha = 0.1;
  opts->max_iters = 1000;
  opts->epochs = 20;
  opts->batch_grad = 0;
  opts->batch_hess = 0;
  opts->gtol = 1e-8;
  opts->seed = 0;
}

sonia_status sonia_run(const sonia_problem* problem, const sonia_dataset* test_data,
                       const sonia_run_options* opts, const double* w0, sonia_result** out) {
  return guarded([&]() {
    if (!problem || !opts || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    const sonia::Objective& obj = *problem->obj;
    const std::size_t d = obj.dim();
    std::vector<double> start(d, 0.0);
    if (w0) start.assign(w0, w0 + d);

    const sonia::StepRule step = opts->step_kind == SONIA_STEP_ARMIJO
                                     ? sonia::StepRule::armijo_rule()
                                     : sonia::StepRule::fixed(opts->alpha);

    sonia::RunHooks hooks;
    const sonia::Dataset& acc_data = test_data ? *test_data->ds : *problem->spec.data;
    const sonia::ProblemKind kind = problem->spec.kind;
    hooks.accuracy = [&acc_data, kind](const std::vector<double>& w) {
      return sonia::classification_accuracy(acc_data, kind, w);
    };

    const std::size_t n = obj.num_samples();
    sonia::RunResult res;
    switch (opts->optimizer) {
      case SONIA_OPT_SONIA: {
        sonia::SoniaConfig cfg;
        cfg.memory = std::min<std::size_t>(opts->memory, d);
        cfg.eps = opts->eps;
        cfg.rho_rule = opts->rho_rule == SONIA_RHO_THEORY_MIN ? sonia::RhoRule::theory_min
                                                              : sonia::RhoRule::paper_max;
        cfg.step = step;
        cfg.gtol = opts->gtol;
        cfg.seed = opts->seed;
        if (opts->batch_grad > 0) {
          cfg.batch_grad = opts->batch_grad;
          cfg.batch_hess = opts->batch_hess > 0 ? opts->batch_hess : opts->batch_grad;
          const std::int64_t per_epoch =
              static_cast<std::int64_t>((n + cfg.batch_grad - 1) / cfg.batch_grad);
          cfg.max_iters = opts->epochs * per_epoch;
          res = sonia::run_stochastic(obj, cfg, std::move(start), hooks);
        } else {
          cfg.max_iters = opts->max_iters;
          res = sonia::run_deterministic(obj, cfg, std::move(start), hooks);
        }
        break;
      }
      case SONIA_OPT_GD:
        res = sonia::gd_run(obj, step, std::move(start), opts->max_iters, opts->gtol, hooks);
        break;
      case SONIA_OPT_LBFGS:
        res = sonia::lbfgs_run(obj, opts->memory, step, std::move(start), opts->max_iters,
                               opts->gtol, hooks);
        break;
      case SONIA_OPT_SGD: {
        if (opts->step_kind != SONIA_STEP_FIXED)
          return fail(SONIA_ERR_INVALID_ARGUMENT, "sgd requires a fixed step");
        const std::size_t batch = opts->batch_grad > 0 ? opts->batch_grad : 16;
        res = sonia::sgd_run(obj, opts->alpha, batch, std::move(start), opts->epochs, opts->seed,
                             hooks);
        break;
      }
      default:
        return fail(SONIA_ERR_INVALID_ARGUMENT, "bad optimizer kind");
    }
    *out = new sonia_result{std::move(res)};
    return SONIA_OK;
  });
}

size_t sonia_result_trace_len(const sonia_result* r) { return r ? r->res.trace.size() : 0; }

sonia_status sonia_result_trace_row(const sonia_result* r, size_t i, sonia_trace_row* out) {
  if (!r || !out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
  if (i >= r->res.trace.size()) return fail(SONIA_ERR_INVALID_ARGUMENT, "trace index out of range");
  const sonia::TraceRecord& rec = r->res.trace[i];
  out->iter = rec.iter;
  out->passes = rec.passes;
  out->f = rec.f;
  out->gnorm = rec.gnorm;
  out->alpha = rec.alpha;
  out->test_accuracy = rec.test_accuracy;
  return SONIA_OK;
}

size_t sonia_result_dim(const sonia_result* r) { return r ? r->res.state.w.size() : 0; }

sonia_status sonia_result_solution(const sonia_result* r, double* buf, size_t len) {
  if (!r || !buf) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
  if (len < r->res.state.w.size())
    return fail(SONIA_ERR_INVALID_ARGUMENT, "buffer too small for solution");
  std::memcpy(buf, r->res.state.w.data(), r->res.state.w.size() * sizeof(double));
  return SONIA_OK;
}

int sonia_result_termination(const sonia_result* r) {
  if (!r) return SONIA_TERM_NON_FINITE;
  switch (r->res.reason) {
    case sonia::TermReason::converged: return SONIA_TERM_CONVERGED;
    case sonia::TermReason::max_iters: return SONIA_TERM_MAX_ITERS;
    case sonia::TermReason::line_search_failed: return SONIA_TERM_LINE_SEARCH_FAILED;
    case sonia::TermReason::non_finite: return SONIA_TERM_NON_FINITE;
  }
  return SONIA_TERM_NON_FINITE;
}

double sonia_result_final_f(const sonia_result* r) { return r ? r->res.final_f : 0.0; }

sonia_status sonia_result_counters(const sonia_result* r, double* value_passes,
                                   double* grad_passes, double* hess_passes) {
  if (!r) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
  if (value_passes) *value_passes = r->res.state.counters.value_passes;
  if (grad_passes) *grad_passes = r->res.state.counters.grad_passes;
  if (hess_passes) *hess_passes = r->res.state.counters.hess_col_passes;
  return SONIA_OK;
}

void sonia_result_destroy(sonia_result* r) { delete r; }

sonia_status sonia_reference_optimum(const sonia_problem* problem, double* fstar, int* exact) {
  return guarded([&]() {
    if (!problem || !fstar) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    const sonia::ReferenceOptimum ref = sonia::compute_reference_optimum(*problem->obj);
    *fstar = ref.fstar;
    if (exact) *exact = ref.exact ? 1 : 0;
    return SONIA_OK;
  });
}

sonia_status sonia_experiment_run(const char* config_json, char** manifest_path_out,
                                  int* all_ok) {
  return guarded([&]() {
    if (!config_json) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    const sonia::ExperimentConfig cfg = sonia::ExperimentConfig::from_json(config_json);
    const sonia::ExperimentReport report = sonia::run_experiment(cfg);
    if (manifest_path_out) *manifest_path_out = dup_string(report.manifest_path);
    if (all_ok) *all_ok = report.all_ok ? 1 : 0;
    return SONIA_OK;
  });
}

sonia_status sonia_summary_emit(const char* trace_dir, char** text_out) {
  return guarded([&]() {
    if (!trace_dir || !text_out) return fail(SONIA_ERR_INVALID_ARGUMENT, "null argument");
    *text_out = dup_string(sonia::emit_summary(trace_dir));
    return SONIA_OK;
  });
}

void sonia_string_free(char* s) { std::free(s); }

}  // extern "C"
