/* C interface to the sonia optimization library.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return SONIA_OK on success; on failure they return an error code
 * and leave a human-readable message retrievable with sonia_last_error()
 * (thread local). Out-parameters are untouched on failure.
 */
#ifndef SONIA_H
#define SONIA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SONIA_API __declspec(dllexport)
#else
#define SONIA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sonia_status {
  SONIA_OK = 0,
  SONIA_ERR_INVALID_ARGUMENT = 1,
  SONIA_ERR_RUNTIME = 2,
  SONIA_ERR_UNKNOWN = 3
} sonia_status;

typedef enum sonia_problem_kind {
  SONIA_PROBLEM_LOGISTIC = 0,
  SONIA_PROBLEM_NLLS = 1
} sonia_problem_kind;

typedef enum sonia_optimizer_kind {
  SONIA_OPT_SONIA = 0,
  SONIA_OPT_GD = 1,
  SONIA_OPT_LBFGS = 2,
  SONIA_OPT_SGD = 3
} sonia_optimizer_kind;

typedef enum sonia_rho_rule {
  SONIA_RHO_THEORY_MIN = 0,
  SONIA_RHO_PAPER_MAX = 1
} sonia_rho_rule;

typedef enum sonia_step_kind {
  SONIA_STEP_ARMIJO = 0,
  SONIA_STEP_FIXED = 1
} sonia_step_kind;

typedef enum sonia_term_reason {
  SONIA_TERM_CONVERGED = 0,
  SONIA_TERM_MAX_ITERS = 1,
  SONIA_TERM_LINE_SEARCH_FAILED = 2,
  SONIA_TERM_NON_FINITE = 3
} sonia_term_reason;

typedef struct sonia_dataset sonia_dataset;
typedef struct sonia_problem sonia_problem;
typedef struct sonia_result sonia_result;

SONIA_API const char* sonia_version(void);
SONIA_API const char* sonia_last_error(void);

/* ---- datasets ------------------------------------------------------- */

/* LIBSVM text format; gzip files are decompressed transparently. Labels are
 * remapped to -1/+1 (logistic) or 0/1 (nlls). dim_override widens the
 * feature dimension (0 = use the largest index seen). */
SONIA_API sonia_status sonia_dataset_load_libsvm(const char* path, int problem_kind,
                                                 size_t dim_override, sonia_dataset** out);
SONIA_API sonia_status sonia_dataset_parse_libsvm(const char* text, int problem_kind,
                                                  size_t dim_override, sonia_dataset** out);
SONIA_API sonia_status sonia_dataset_save_libsvm(const sonia_dataset* ds, const char* path);

/* Synthetic classification data: Gaussian features with column scales
 * log-spaced in [1, kappa], planted labels with 10% noise. */
SONIA_API sonia_status sonia_dataset_synth_logistic(size_t n, size_t d, double kappa,
                                                    uint64_t seed, int problem_kind,
                                                    sonia_dataset** out);

SONIA_API sonia_status sonia_dataset_split(const sonia_dataset* ds, double test_fraction,
                                           uint64_t seed, sonia_dataset** train,
                                           sonia_dataset** test);
SONIA_API size_t sonia_dataset_rows(const sonia_dataset* ds);
SONIA_API size_t sonia_dataset_cols(const sonia_dataset* ds);
SONIA_API void sonia_dataset_destroy(sonia_dataset* ds);

/* ---- problems ------------------------------------------------------- */

SONIA_API sonia_status sonia_problem_create(const sonia_dataset* ds, int problem_kind,
                                            double lambda, sonia_problem** out);
SONIA_API void sonia_problem_destroy(sonia_problem* p);

SONIA_API sonia_status sonia_problem_value(const sonia_problem* p, const double* w, size_t len,
                                           double* out);
SONIA_API sonia_status sonia_problem_gradient(const sonia_problem* p, const double* w, size_t len,
                                              double* out);

/* ---- optimizer runs -------------------------------------------------- */

typedef struct sonia_run_options {
  int optimizer;     /* sonia_optimizer_kind */
  size_t memory;     /* sampled directions per iteration (sonia), pairs (lbfgs) */
  double eps;        /* eigenvalue truncation threshold */
  int rho_rule;      /* sonia_rho_rule */
  int step_kind;     /* sonia_step_kind; stochastic runs require FIXED */
  double alpha;      /* fixed step length */
  int64_t max_iters; /* deterministic iteration budget */
  int64_t epochs;    /* stochastic epoch budget */
  size_t batch_grad; /* 0 = full batch; > 0 selects the stochastic driver */
  size_t batch_hess; /* curvature batch (defaults to batch_grad) */
  double gtol;       /* gradient-norm stopping tolerance */
  uint64_t seed;
} sonia_run_options;

SONIA_API void sonia_run_options_init(sonia_run_options* opts);

/* Run an optimizer from w0 (null = zero vector). test_data, when given, is
 * scored for the trace's test-accuracy column; otherwise the training data
 * is scored. */
SONIA_API sonia_status sonia_run(const sonia_problem* problem, const sonia_dataset* test_data,
                                 const sonia_run_options* opts, const double* w0,
                                 sonia_result** out);

typedef struct sonia_trace_row {
  int64_t iter;
  double passes; /* cumulative effective passes */
  double f;
  double gnorm;
  double alpha;
  double test_accuracy;
} sonia_trace_row;

SONIA_API size_t sonia_result_trace_len(const sonia_result* r);
SONIA_API sonia_status sonia_result_trace_row(const sonia_result* r, size_t i,
                                              sonia_trace_row* out);
SONIA_API size_t sonia_result_dim(const sonia_result* r);
SONIA_API sonia_status sonia_result_solution(const sonia_result* r, double* buf, size_t len);
SONIA_API int sonia_result_termination(const sonia_result* r);
SONIA_API double sonia_result_final_f(const sonia_result* r);
SONIA_API sonia_status sonia_result_counters(const sonia_result* r, double* value_passes,
                                             double* grad_passes, double* hess_passes);
SONIA_API void sonia_result_destroy(sonia_result* r);

/* ---- benchmark harness ----------------------------------------------- */

/* High-accuracy reference objective value for strongly convex problems
 * (logistic with lambda > 0). exact reports whether the reference run hit
 * its gradient tolerance. */
SONIA_API sonia_status sonia_reference_optimum(const sonia_problem* problem, double* fstar,
                                               int* exact);

/* Run a full experiment described by a JSON config (see README for the
 * schema): expands the hyper-grid, runs every cell and seed, writes one
 * trace CSV per run plus a JSON manifest into the output directory.
 * all_ok (nullable) reports whether every cell completed. The returned
 * manifest path (nullable out) is freed with sonia_string_free. */
SONIA_API sonia_status sonia_experiment_run(const char* config_json, char** manifest_path_out,
                                            int* all_ok);

/* Aggregate the traces in a directory into a summary table (also written to
 * summary.csv inside the directory). Free the text with sonia_string_free. */
SONIA_API sonia_status sonia_summary_emit(const char* trace_dir, char** text_out);

SONIA_API void sonia_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SONIA_H */
