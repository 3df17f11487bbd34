// Acceptance suite: one check per criterion, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <new>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sonia/baselines.hpp"
#include "sonia/dataset.hpp"
#include "sonia/experiment.hpp"
#include "sonia/optimizer.hpp"
#include "sonia/problems.hpp"
#include "test_objectives.hpp"

using namespace sonia;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

// ---- allocation instrumentation (criterion 12) ----------------------------
// Every allocation carries a 16-byte size header so the live total and the
// high-water mark can be tracked across the whole process.

namespace alloc_guard {
std::atomic<long long> live{0};
std::atomic<long long> peak{0};

inline void on_alloc(std::size_t n) {
  const long long now = live.fetch_add(static_cast<long long>(n)) + static_cast<long long>(n);
  long long seen = peak.load();
  while (now > seen && !peak.compare_exchange_weak(seen, now)) {
  }
}

inline void on_free(std::size_t n) { live.fetch_sub(static_cast<long long>(n)); }

inline void reset_peak() { peak.store(live.load()); }
}  // namespace alloc_guard

namespace {
constexpr std::size_t kHeader = 16;

void* tracked_alloc(std::size_t n) {
  void* base = std::malloc(n + kHeader);
  if (!base) throw std::bad_alloc();
  *static_cast<std::size_t*>(base) = n;
  alloc_guard::on_alloc(n);
  return static_cast<char*>(base) + kHeader;
}

void tracked_free(void* p) noexcept {
  if (!p) return;
  char* base = static_cast<char*>(p) - kHeader;
  alloc_guard::on_free(*reinterpret_cast<std::size_t*>(base));
  std::free(base);
}
}  // namespace

void* operator new(std::size_t n) { return tracked_alloc(n); }
void* operator new[](std::size_t n) { return tracked_alloc(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return tracked_alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return tracked_alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { tracked_free(p); }

// ---- small shared helpers --------------------------------------------------

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::shared_ptr<const Dataset> random_dense(std::size_t n, std::size_t d, ProblemKind kind,
                                            std::mt19937_64& eng) {
  std::normal_distribution<double> normal;
  std::vector<double> values(n * d), labels(n);
  for (double& v : values) v = normal(eng);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = kind == ProblemKind::logistic ? ((eng() & 1) ? 1.0 : -1.0)
                                              : ((eng() & 1) ? 1.0 : 0.0);
  return std::make_shared<const Dataset>(Dataset::from_dense(n, d, values, labels));
}

std::vector<double> random_vec(std::size_t d, std::mt19937_64& eng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(d);
  for (double& x : v) x = normal(eng);
  return v;
}

CurvatureBlock block_for(const Objective& obj, const std::vector<double>& w, Matrix s) {
  CurvatureBlock block;
  block.y = obj.hess_mat(w, s);
  block.sty = matmul_tn(s, block.y);
  block.s = std::move(s);
  return block;
}

// Orthonormal complement of the operator basis, built with test-local
// Gram-Schmidt (independent of the library QR).
Matrix complement_basis(const TruncatedOperator& op, std::size_t d, std::mt19937_64& eng) {
  const std::size_t m = op.memory();
  Matrix w(d, d - m);
  std::normal_distribution<double> normal;
  std::vector<double> v(d);
  for (std::size_t col = 0; col < d - m; ++col) {
    for (int attempt = 0;; ++attempt) {
      for (double& x : v) x = normal(eng);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < m; ++k) {
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += op.vtilde(i, k) * v[i];
          for (std::size_t i = 0; i < d; ++i) v[i] -= s * op.vtilde(i, k);
        }
        for (std::size_t k = 0; k < col; ++k) {
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += w(i, k) * v[i];
          for (std::size_t i = 0; i < d; ++i) v[i] -= s * w(i, k);
        }
      }
      const double nrm = norm2(v);
      if (nrm > 1e-6 || attempt > 8) {
        for (std::size_t i = 0; i < d; ++i) w(i, col) = v[i] / nrm;
        break;
      }
    }
  }
  return w;
}

struct LinearFit {
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LinearFit f;
  f.n = xs.size();
  if (xs.size() < 3) return f;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double num = n * sxy - sx * sy;
  f.slope = num / (n * sxx - sx * sx);
  f.r2 = num * num / ((n * sxx - sx * sx) * (n * syy - sy * sy));
  return f;
}

double passes_to_gap(const RunResult& res, double fstar, double threshold) {
  for (const TraceRecord& r : res.trace)
    if (std::isfinite(r.f) && r.f - fstar <= threshold) return r.passes;
  return std::numeric_limits<double>::infinity();
}

// ---- criteria --------------------------------------------------------------

bool criterion1_calculus(std::string& detail) {
  const auto t0 = Clock::now();
  std::mt19937_64 eng(101);
  double worst_grad = 0.0, worst_hess = 0.0;
  for (ProblemKind kind : {ProblemKind::logistic, ProblemKind::nlls}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + eng() % 49;
      const std::size_t d = 1 + eng() % 20;
      auto ds = random_dense(n, d, kind, eng);
      const double lambda = kind == ProblemKind::logistic ? 1e-3 : 0.0;
      ErmObjective obj(ProblemSpec(kind, lambda, ds));
      const std::vector<double> w = random_vec(d, eng);

      const double h = 1e-5 * (1.0 + norm2(w));
      const std::vector<double> fd = oracles::fd_gradient(
          [&](const std::vector<double>& x) { return obj.value(x); }, w, h);
      worst_grad = std::max(worst_grad, oracles::max_rel_vec_err(obj.gradient(w), fd));

      const std::size_t m = 1 + eng() % 3;
      const Matrix s = oracles::random_matrix(d, m, eng);
      const Matrix hess = obj.hess_mat(w, s);
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> dir(d), col(d);
        for (std::size_t i = 0; i < d; ++i) {
          dir[i] = s(i, j);
          col[i] = hess(i, j);
        }
        const std::vector<double> fd_col = oracles::fd_directional(
            [&](const std::vector<double>& x) { return obj.gradient(x); }, w, dir, 1e-5);
        worst_hess = std::max(worst_hess, oracles::max_rel_vec_err(col, fd_col));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  detail = fmt("grad err %.2e (<=1e-5), hess err %.2e (<=1e-4), %.1fs (<10s)", worst_grad,
               worst_hess, elapsed);
  return worst_grad <= 1e-5 && worst_hess <= 1e-4 && elapsed < 10.0;
}

bool criterion2_operator_identity(std::string& detail) {
  std::mt19937_64 eng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + eng() % 19;
    const std::size_t m = 1 + eng() % std::min<std::size_t>(8, d);
    const Matrix h = oracles::random_symmetric(d, eng);  // indefinite on purpose
    oracles::QuadraticObjective quad(h, std::vector<double>(d, 0.0));
    Rng rng(eng());
    const TruncatedOperator op =
        build_operator(block_for(quad, std::vector<double>(d, 0.0), sample_directions(d, m, rng)),
                       1e-5, trial % 2 ? RhoRule::paper_max : RhoRule::theory_min);

    const std::vector<double> g = random_vec(d, eng);
    const std::vector<double> implicit = search_direction(op, g);
    const std::vector<double> expect = mat_vec(oracles::dense_operator(op, d), g);
    double scale = 0.0;
    for (double v : expect) scale = std::max(scale, std::abs(v));
    scale = std::max(scale, 1.0);
    for (std::size_t i = 0; i < d; ++i)
      worst = std::max(worst, std::abs(implicit[i] + expect[i]) / scale);
  }
  detail = fmt("max |p + A g| rel err %.2e (<=1e-12) over 50 instances", worst);
  return worst <= 1e-12;
}

bool criterion3_spectrum(std::string& detail) {
  std::mt19937_64 eng(303);
  double worst_pair = 0.0, worst_rho = 0.0;
  bool all_pd = true, bounds_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + eng() % 18;
    const std::size_t m = 1 + eng() % std::min<std::size_t>(8, d);
    const Matrix h = oracles::random_symmetric(d, eng);
    oracles::QuadraticObjective quad(h, std::vector<double>(d, 0.0));
    Rng rng(eng());
    Matrix s = sample_directions(d, m, rng);
    if (trial % 5 == 0 && m >= 2)  // constructed rank-deficient Y^T S
      for (std::size_t i = 0; i < d; ++i) s(i, m - 1) = s(i, 0);
    const double eps = 1e-5;
    const TruncatedOperator op =
        build_operator(block_for(quad, std::vector<double>(d, 0.0), std::move(s)), eps,
                       trial % 2 ? RhoRule::paper_max : RhoRule::theory_min);

    for (double ie : op.inv_eig)
      if (!(ie > 0.0 && ie <= 1.0 / eps * (1.0 + 1e-12))) bounds_ok = false;
    if (!(op.rho > 0.0 && op.rho <= 1.0 / eps * (1.0 + 1e-12))) bounds_ok = false;

    const Matrix dense = oracles::dense_operator(op, d);
    const double scale = std::max(1.0, frobenius_norm(dense));
    // Claimed eigenpairs: A vtilde_k = inv_eig_k vtilde_k ...
    const Matrix av = matmul(dense, op.vtilde);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < d; ++i)
        worst_pair = std::max(
            worst_pair, std::abs(av(i, k) - op.inv_eig[k] * op.vtilde(i, k)) / scale);
    // ... and A w = rho w on the full orthogonal complement.
    const Matrix w = complement_basis(op, d, eng);
    const Matrix aw = matmul(dense, w);
    for (std::size_t k = 0; k + m < d; ++k)
      for (std::size_t i = 0; i < d; ++i)
        worst_rho = std::max(worst_rho, std::abs(aw(i, k) - op.rho * w(i, k)) / scale);

    if (!oracles::cholesky_pd(dense)) all_pd = false;
  }
  detail = fmt("eigenpair resid %.2e, complement resid %.2e (<=1e-10), bounds %s, PD %s",
               worst_pair, worst_rho, bounds_ok ? "ok" : "VIOLATED", all_pd ? "ok" : "VIOLATED");
  return worst_pair <= 1e-10 && worst_rho <= 1e-10 && bounds_ok && all_pd;
}

bool criterion4_secant_invariance(std::string& detail) {
  std::mt19937_64 eng(404);
  double worst_secant = 0.0, worst_inv = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 4 + eng() % 17;
    const std::size_t m = 2 + eng() % std::min<std::size_t>(5, d - 1);
    Matrix h = oracles::random_symmetric(d, eng);
    for (std::size_t i = 0; i < d; ++i) h(i, i) += 3.0;  // keep Y^T S invertible
    oracles::QuadraticObjective quad(h, std::vector<double>(d, 0.0));
    Rng rng(eng());
    const Matrix s = sample_directions(d, m, rng);
    const CurvatureBlock block = block_for(quad, std::vector<double>(d, 0.0), s);
    const TruncatedOperator op = build_operator(block, 1e-5, RhoRule::paper_max);

    const Matrix b = oracles::dense_b_matrix(op, d);
    const Matrix bs = matmul(b, s);
    worst_secant = std::max(
        worst_secant, oracles::frob_diff(bs, block.y) / std::max(1.0, frobenius_norm(block.y)));

    for (int c_trial = 0; c_trial < 20; ++c_trial) {
      Matrix c = oracles::random_matrix(m, m, eng);
      for (std::size_t i = 0; i < m; ++i) c(i, i) += 2.0;
      const TruncatedOperator alt = build_operator(
          block_for(quad, std::vector<double>(d, 0.0), matmul(s, c)), 1e-5, RhoRule::paper_max);
      worst_inv = std::max(worst_inv,
                           oracles::frob_diff(oracles::dense_b_matrix(alt, d), b) /
                               std::max(1.0, frobenius_norm(b)));
    }
  }
  detail = fmt("secant resid %.2e, re-parameterization resid %.2e (<=1e-8)", worst_secant,
               worst_inv);
  return worst_secant <= 1e-8 && worst_inv <= 1e-8;
}

bool criterion5_reductions(std::string& detail) {
  // (a) zero memory equals scaled gradient descent, bitwise.
  auto ds = std::make_shared<const Dataset>(synth_logistic(80, 10, 4.0, 55));
  ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ds));
  SoniaConfig cfg;
  cfg.memory = 0;
  cfg.step = StepRule::fixed(0.1);
  cfg.max_iters = 30;
  cfg.gtol = 1e-12;
  const RunResult a = run_deterministic(obj, cfg, std::vector<double>(10, 0.0));
  const RunResult b = gd_run(obj, StepRule::fixed(0.1), std::vector<double>(10, 0.0), 30, 1e-12);
  bool bitwise = a.trace.size() == b.trace.size();
  if (bitwise)
    for (std::size_t i = 0; i < a.trace.size(); ++i)
      bitwise = bitwise && a.trace[i].iter == b.trace[i].iter &&
                a.trace[i].passes == b.trace[i].passes && a.trace[i].f == b.trace[i].f &&
                a.trace[i].gnorm == b.trace[i].gnorm && a.trace[i].alpha == b.trace[i].alpha;
  if (bitwise)
    for (std::size_t i = 0; i < 10; ++i) bitwise = bitwise && a.state.w[i] == b.state.w[i];

  // (b) full memory with a unit step solves an SPD quadratic in one shot.
  std::mt19937_64 eng(505);
  const std::size_t d = 12;
  Matrix basis = oracles::random_matrix(d, d, eng);
  Matrix h = matmul(basis, transpose(basis));
  for (std::size_t i = 0; i < d; ++i) h(i, i) += 1.0;  // eigenvalues well above eps
  oracles::QuadraticObjective quad(h, random_vec(d, eng));
  SoniaConfig newton;
  newton.memory = d;
  newton.eps = 1e-5;
  newton.step = StepRule::fixed(1.0);
  newton.max_iters = 1;
  newton.gtol = 0.0;
  newton.seed = 2;
  const RunResult one = run_deterministic(quad, newton, std::vector<double>(d, 0.0));
  const double gnorm_after = one.trace.back().gnorm;

  detail = fmt("m=0 trace %s, one-step gradient norm %.2e (<=1e-10)",
               bitwise ? "bit-identical" : "DIFFERS", gnorm_after);
  return bitwise && gnorm_after <= 1e-10;
}

bool criterion6_descent(std::string& detail) {
  bool all_ok = true;
  double worst_slack = 0.0;
  for (ProblemKind kind : {ProblemKind::logistic, ProblemKind::nlls}) {
    Dataset raw = synth_logistic(150, 12, 5.0, 66);
    auto ds = std::make_shared<const Dataset>(raw.relabeled(kind));
    const double lambda = kind == ProblemKind::logistic ? 1e-3 : 0.0;
    ErmObjective obj(ProblemSpec(kind, lambda, ds));

    for (RhoRule rule : {RhoRule::theory_min, RhoRule::paper_max}) {
      SoniaConfig cfg;
      cfg.memory = 6;
      cfg.rho_rule = rule;
      cfg.step = StepRule::armijo_rule();
      cfg.max_iters = 60;
      cfg.gtol = 1e-6;
      cfg.seed = 7;

      RunHooks hooks;
      const ArmijoParams params;
      hooks.observer = [&](const IterationInfo& info) {
        const TruncatedOperator& op = *info.op;
        const double mu1 = std::min(op.rho, op.min_inv_eig());
        const double gp = dot(*info.grad, *info.direction);
        const double gg = dot(*info.grad, *info.grad);
        if (!(gp <= -mu1 * gg * (1.0 - 1e-10))) all_ok = false;
        worst_slack = std::max(worst_slack, gp / gg + mu1);
        // Sufficient decrease, re-verified from scratch.
        std::vector<double> trial(info.w->size());
        for (std::size_t i = 0; i < trial.size(); ++i)
          trial[i] = (*info.w)[i] + info.alpha * (*info.direction)[i];
        if (!(obj.value(trial) <= info.f + params.c * info.alpha * gp)) all_ok = false;
      };
      const RunResult res = run_deterministic(obj, cfg, std::vector<double>(12, 0.0), hooks);
      for (std::size_t i = 1; i < res.trace.size(); ++i)
        if (!(res.trace[i].f < res.trace[i - 1].f)) all_ok = false;
    }
  }
  detail = fmt("descent + sufficient decrease + strict monotonicity %s",
               all_ok ? "hold on every iteration" : "VIOLATED");
  return all_ok;
}

struct Criterion7Data {
  std::shared_ptr<const Dataset> data;
  double fstar = 0.0;
  RunResult run;
  bool valid = false;
};

Criterion7Data& shared_c7() {
  static Criterion7Data ctx;
  if (!ctx.valid) {
    ctx.data = std::make_shared<const Dataset>(synth_logistic(2000, 50, 100.0, 0));
    ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ctx.data));
    ctx.fstar = compute_reference_optimum(obj).fstar;
    SoniaConfig cfg;
    cfg.memory = 16;
    cfg.eps = 1e-5;
    cfg.rho_rule = RhoRule::paper_max;
    cfg.step = StepRule::armijo_rule();
    cfg.max_iters = 2500;
    cfg.gtol = 0.0;
    cfg.seed = 1;
    ctx.run = run_deterministic(obj, cfg, std::vector<double>(50, 0.0));
    ctx.valid = true;
  }
  return ctx;
}

bool criterion7_linear_convergence(std::string& detail) {
  const auto t0 = Clock::now();
  Criterion7Data& ctx = shared_c7();
  const double p8 = passes_to_gap(ctx.run, ctx.fstar, 1e-8);

  std::vector<double> xs, ys;
  for (const TraceRecord& r : ctx.run.trace) {
    const double gap = std::max(r.f - ctx.fstar, 1e-16);
    if (gap <= 1e-2 && gap >= 1e-6) {
      xs.push_back(static_cast<double>(r.iter));
      ys.push_back(std::log10(gap));
    }
  }
  const LinearFit fit = fit_line(xs, ys);
  const double elapsed = seconds_since(t0);

  const bool fast_enough = p8 <= 200.0;
  const bool slope_ok = fit.slope < 0.0 && fit.r2 >= 0.95 && fit.n >= 3;
  const bool time_ok = elapsed < 60.0;
  detail = fmt("gap<=1e-8 at %.0f passes (required <=200: %s); slope %.3g, R2 %.3f over %zu rows "
               "(%s); %.1fs (<60s: %s)",
               p8, fast_enough ? "ok" : "FAIL", fit.slope, fit.r2, fit.n,
               slope_ok ? "ok" : "FAIL", elapsed, time_ok ? "ok" : "FAIL");
  return fast_enough && slope_ok && time_ok;
}

bool criterion8_ill_conditioning(std::string& detail) {
  Criterion7Data& ctx = shared_c7();
  ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ctx.data));
  const double sonia_passes = passes_to_gap(ctx.run, ctx.fstar, 1e-6);
  if (!std::isfinite(sonia_passes)) {
    detail = "the sampled-subspace run never reached gap 1e-6";
    return false;
  }

  // Tune fixed-step gradient descent, then give it triple the budget.
  double best_alpha = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double alpha : {1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 5e-4, 1e-4}) {
    const RunResult pilot =
        gd_run(obj, StepRule::fixed(alpha), std::vector<double>(50, 0.0), 300, 0.0);
    const double f = pilot.trace.back().f;
    if (std::isfinite(f) && f < best_f) {
      best_f = f;
      best_alpha = alpha;
    }
  }
  const std::int64_t budget = static_cast<std::int64_t>(3.0 * sonia_passes);
  const RunResult gd =
      gd_run(obj, StepRule::fixed(best_alpha), std::vector<double>(50, 0.0), budget, 0.0);
  const double gd_passes = passes_to_gap(gd, ctx.fstar, 1e-6);

  detail = fmt("passes to gap 1e-6: sampled-subspace %.0f vs tuned GD (alpha=%g) %.0f",
               sonia_passes, best_alpha, gd_passes);
  return sonia_passes < gd_passes;
}

bool criterion9_stochastic_neighborhood(std::string& detail) {
  const auto t0 = Clock::now();
  auto ds = std::make_shared<const Dataset>(synth_logistic(4000, 30, 10.0, 0));
  ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ds));
  const double fstar = compute_reference_optimum(obj).fstar;

  // Theorems 3-4 regime: theoretical complement scale, memory small enough
  // that the curvature batch informs the whole sampled block.
  auto run_stoch = [&](std::size_t batch, double alpha, std::int64_t epochs, std::uint64_t seed) {
    SoniaConfig cfg;
    cfg.memory = 8;
    cfg.eps = 1e-5;
    cfg.rho_rule = RhoRule::theory_min;
    cfg.step = StepRule::fixed(alpha);
    cfg.batch_grad = batch;
    cfg.batch_hess = batch;
    const std::size_t n = obj.num_samples();
    cfg.max_iters = epochs * static_cast<std::int64_t>((n + batch - 1) / batch);
    cfg.gtol = 0.0;
    cfg.seed = seed;
    return run_stochastic(obj, cfg, std::vector<double>(30, 0.0));
  };

  // Shared step length, tuned on the noisier (small-batch) configuration.
  double tuned = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double alpha : {1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001}) {
    const RunResult pilot = run_stoch(16, alpha, 6, 0);
    const double f = pilot.trace.back().f;
    if (std::isfinite(f) && f < best_f) {
      best_f = f;
      tuned = alpha;
    }
  }

  auto tail_mean_gap = [&](const RunResult& r) {
    double s = 0.0;
    int c = 0;
    for (std::size_t i = r.trace.size() >= 5 ? r.trace.size() - 5 : 0; i < r.trace.size(); ++i) {
      s += r.trace[i].f - fstar;
      ++c;
    }
    return s / c;
  };

  bool all_smaller = true;
  std::string per_seed;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const double g16 = tail_mean_gap(run_stoch(16, tuned, 300, seed));
    const double g256 = tail_mean_gap(run_stoch(256, tuned, 300, seed));
    all_smaller = all_smaller && g256 < g16;
    per_seed += fmt(" [seed %llu: %.2e vs %.2e]", static_cast<unsigned long long>(seed), g16,
                    g256);
  }
  const double elapsed = seconds_since(t0);
  detail = fmt("alpha=%g, final-5-epoch mean gap (batch 16 vs 256):%s; %.1fs (<120s)", tuned,
               per_seed.c_str(), elapsed);
  return all_smaller && elapsed < 120.0;
}

bool criterion10_nonconvex(std::string& detail) {
  Dataset raw = synth_logistic(1000, 30, 5.0, 77);
  auto ds = std::make_shared<const Dataset>(raw.relabeled(ProblemKind::nlls));
  ErmObjective obj(ProblemSpec(ProblemKind::nlls, 0.0, ds));

  SoniaConfig cfg;
  cfg.memory = 30;
  cfg.eps = 1e-5;
  cfg.rho_rule = RhoRule::paper_max;
  cfg.step = StepRule::armijo_rule();
  cfg.max_iters = 150;
  cfg.gtol = 1e-10;
  cfg.seed = 3;

  double mu1 = std::numeric_limits<double>::infinity();
  double alpha_sum = 0.0;
  std::int64_t steps = 0;
  RunHooks hooks;
  hooks.observer = [&](const IterationInfo& info) {
    mu1 = std::min(mu1, std::min(info.op->rho, info.op->min_inv_eig()));
    alpha_sum += info.alpha;
    ++steps;
  };
  const RunResult res = run_deterministic(obj, cfg, std::vector<double>(30, 0.0), hooks);

  bool nonincreasing = true;
  double min_gnorm_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    if (i > 0 && res.trace[i].f > res.trace[i - 1].f) nonincreasing = false;
    min_gnorm_sq = std::min(min_gnorm_sq, res.trace[i].gnorm * res.trace[i].gnorm);
  }
  const double alpha_eff = steps > 0 ? alpha_sum / steps : 0.0;
  const double t = static_cast<double>(steps);
  const double f0 = res.trace.front().f;
  const double f_end = res.trace.back().f;
  const double bound = 10.0 * 2.0 * (f0 - f_end) / (alpha_eff * mu1 * t);

  detail = fmt("F nonincreasing %s; min |grad|^2 %.2e <= sanity bound %.2e over T=%lld",
               nonincreasing ? "ok" : "VIOLATED", min_gnorm_sq, bound,
               static_cast<long long>(steps));
  return nonincreasing && steps > 1 && min_gnorm_sq <= bound;
}

bool criterion11_partitioned(std::string& detail) {
  std::mt19937_64 eng(1111);
  const std::size_t n = 20, d = 7, m = 3;
  auto ds = random_dense(n, d, ProblemKind::logistic, eng);
  ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ds));
  const std::vector<double> w = random_vec(d, eng);
  const Matrix s = oracles::random_matrix(d, m, eng);

  const Matrix y_mono = obj.hess_mat(w, s);
  const Matrix sty_mono = matmul_tn(s, y_mono);
  const double y_scale = std::max(1.0, frobenius_norm(y_mono));
  const double sty_scale = std::max(1.0, frobenius_norm(sty_mono));

  double worst = 0.0;
  for (std::size_t k : {std::size_t(1), std::size_t(2), std::size_t(4), n}) {
    std::vector<IndexSet> shards(k);
    for (std::size_t i = 0; i < n; ++i) shards[i % k].push_back(i);
    const CurvatureProducts got = partitioned_hess_block(obj, w, s, shards);
    worst = std::max(worst, oracles::frob_diff(got.y, y_mono) / y_scale);
    worst = std::max(worst, oracles::frob_diff(got.sty, sty_mono) / sty_scale);
  }
  detail = fmt("sharded vs monolithic rel err %.2e (<=1e-12) for K in {1,2,4,n}", worst);
  return worst <= 1e-12;
}

bool criterion12_memory_and_scaling(std::string& detail) {
  // Allocation budget: a d = 10^4, m = 64 run must stay O(d m), far below
  // anything that materializes a d x d matrix (800 MB).
  const std::size_t d = 10000, m = 64;
  auto ds = std::make_shared<const Dataset>(synth_logistic(60, d, 10.0, 5));
  ErmObjective obj(ProblemSpec(ProblemKind::logistic, 1e-3, ds));
  SoniaConfig cfg;
  cfg.memory = m;
  cfg.eps = 1e-5;
  cfg.step = StepRule::fixed(1e-3);
  cfg.max_iters = 3;
  cfg.gtol = 0.0;
  cfg.seed = 1;

  alloc_guard::reset_peak();
  const long long before = alloc_guard::peak.load();
  const RunResult res = run_deterministic(obj, cfg, std::vector<double>(d, 0.0));
  const long long used = alloc_guard::peak.load() - before;
  const long long budget = 24LL * d * m * 8 + (32LL << 20);
  const bool mem_ok = used <= budget && res.trace.size() == 4;

  // Per-iteration wall time must scale linearly in n * d (within 3x).
  auto time_run = [](std::size_t n_samples) {
    auto data = std::make_shared<const Dataset>(synth_logistic(n_samples, 200, 5.0, 9));
    ErmObjective o(ProblemSpec(ProblemKind::logistic, 1e-3, data));
    SoniaConfig c;
    c.memory = 16;
    c.eps = 1e-5;
    c.step = StepRule::fixed(1e-3);
    c.max_iters = 10;
    c.gtol = 0.0;
    c.seed = 4;
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      run_deterministic(o, c, std::vector<double>(200, 0.0));
      best = std::min(best, seconds_since(t0));
    }
    return best / 10.0;
  };
  const double t_small = time_run(1000);
  const double t_large = time_run(10000);
  const double ratio = t_large / t_small;
  const bool scaling_ok = ratio <= 30.0 && ratio >= 10.0 / 3.0;

  detail = fmt("peak %.1f MB (budget %.1f MB, d x d would be %.0f MB); per-iteration time ratio "
               "%.1f for 10x samples (within [3.3, 30])",
               used / 1048576.0, budget / 1048576.0, double(d) * d * 8 / 1048576.0, ratio);
  return mem_ok && scaling_ok;
}

bool criterion13_determinism(std::string& detail) {
  const std::string dir_a = "acceptance_work/det_a", dir_b = "acceptance_work/det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  ExperimentConfig cfg;
  cfg.problem = ProblemKind::logistic;
  cfg.synth = SynthSpec{150, 10, 4.0};
  cfg.lambda = 1e-3;
  cfg.optimizer = "sonia";
  cfg.memory = 6;
  cfg.armijo = true;
  cfg.epochs = 8;
  cfg.seeds = {1, 2};
  cfg.grid["eps"] = {"1e-5", "1e-3"};
  cfg.workers = 2;
  cfg.out_dir = dir_a;
  const ExperimentReport a = run_experiment(cfg);
  cfg.out_dir = dir_b;
  const ExperimentReport b = run_experiment(cfg);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool identical = a.all_ok && b.all_ok && a.results.size() == b.results.size();
  if (identical)
    for (const CellResult& r : a.results)
      identical = identical &&
                  slurp(fs::path(dir_a) / r.trace_file) == slurp(fs::path(dir_b) / r.trace_file);

  // LIBSVM round trip is exact: serialized text is a fixed point of
  // parse + serialize.
  std::istringstream in("+1 1:0.1234567890123456789 3:-2.5e-7\n-1 2:3.0 4:1e300\n+1 1:-1e-17\n");
  const Dataset parsed = parse_libsvm(in, ProblemKind::logistic);
  std::ostringstream first;
  serialize_libsvm(parsed, first);
  std::istringstream again(first.str());
  const Dataset reparsed = parse_libsvm(again, ProblemKind::logistic, parsed.cols());
  std::ostringstream second;
  serialize_libsvm(reparsed, second);
  const bool roundtrip = first.str() == second.str();

  detail = fmt("%zu trace files byte-identical across re-runs: %s; LIBSVM round-trip exact: %s",
               a.results.size(), identical ? "yes" : "NO", roundtrip ? "yes" : "NO");
  return identical && roundtrip;
}

struct Criterion {
  int number;
  const char* name;
  std::function<bool(std::string&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "calculus correctness against finite differences", criterion1_calculus},
      {2, "implicit search direction equals the dense operator", criterion2_operator_identity},
      {3, "operator spectrum bounds and positive definiteness", criterion3_spectrum},
      {4, "secant equations and re-parameterization invariance", criterion4_secant_invariance},
      {5, "zero-memory and full-memory reductions", criterion5_reductions},
      {6, "descent and monotone decrease on every iteration", criterion6_descent},
      {7, "linear convergence on the ill-conditioned synthetic", criterion7_linear_convergence},
      {8, "fewer passes than tuned gradient descent", criterion8_ill_conditioning},
      {9, "stochastic neighborhood shrinks with the batch size", criterion9_stochastic_neighborhood},
      {10, "nonconvex decrease and gradient sanity bound", criterion10_nonconvex},
      {11, "partitioned curvature equals monolithic", criterion11_partitioned},
      {12, "no quadratic-in-d memory, linear time scaling", criterion12_memory_and_scaling},
      {13, "byte-identical traces and exact round trips", criterion13_determinism},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.number != only) continue;
    std::string detail;
    bool ok = false;
    const auto t0 = Clock::now();
    try {
      ok = c.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.number, c.name,
                detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
