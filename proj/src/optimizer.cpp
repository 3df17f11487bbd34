#include "sonia/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "descent_loop.hpp"

namespace sonia {

const char* to_string(TermReason r) {
  switch (r) {
    case TermReason::converged: return "converged";
    case TermReason::max_iters: return "max_iters";
    case TermReason::line_search_failed: return "line_search_failed";
    case TermReason::non_finite: return "non_finite";
  }
  return "unknown";
}

RhoRule rho_rule_from_string(const std::string& s) {
  if (s == "theory_min") return RhoRule::theory_min;
  if (s == "paper_max") return RhoRule::paper_max;
  throw std::invalid_argument("unknown rho rule: " + s);
}

const char* to_string(RhoRule r) {
  return r == RhoRule::theory_min ? "theory_min" : "paper_max";
}

double TruncatedOperator::min_inv_eig() const {
  if (inv_eig.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(inv_eig.begin(), inv_eig.end());
}

Matrix sample_directions(std::size_t d, std::size_t m, Rng& rng) {
  if (m > d) throw std::invalid_argument("sample_directions: memory exceeds dimension");
  Matrix s(d, m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j) s(i, j) = rng.gaussian();
  return s;
}

TruncatedOperator build_operator(const CurvatureBlock& block, double eps, RhoRule rule) {
  if (!(eps > 0.0)) throw std::invalid_argument("build_operator: eps must be positive");
  const std::size_t m = block.s.cols();
  TruncatedOperator op;
  op.eps = eps;
  if (m == 0) {
    // No sampled subspace: the operator degenerates to rho * I and the scale
    // has no spectrum to anchor to, so it defaults to 1.
    op.rho = 1.0;
    return op;
  }
  const std::size_t d = block.s.rows();
  if (block.y.rows() != d || block.y.cols() != m || block.sty.rows() != m ||
      block.sty.cols() != m)
    throw std::invalid_argument("build_operator: inconsistent block dimensions");

  const QrResult qr = thin_qr(block.y);
  const Matrix yts = transpose(block.sty);  // Y^T S
  const Matrix inv = pinv_sym(yts);
  Matrix mid = matmul(matmul(qr.r, inv), transpose(qr.r));
  // R (Y^T S)^+ R^T is symmetric by construction; rounding in the two
  // products is the only asymmetry, so fold it away before factorizing.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = 0.5 * (mid(i, j) + mid(j, i));
      mid(i, j) = v;
      mid(j, i) = v;
    }
  const SymEig eig = sym_eig(mid);

  op.vtilde = matmul(qr.q, eig.vectors);
  op.raw_eig = eig.values;
  op.inv_eig.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    op.inv_eig[i] = 1.0 / std::max(std::abs(eig.values[i]), eps);
  op.rho = rule == RhoRule::theory_min
               ? *std::min_element(op.inv_eig.begin(), op.inv_eig.end())
               : *std::max_element(op.inv_eig.begin(), op.inv_eig.end());
  return op;
}

void decompose_gradient(const TruncatedOperator& op, const std::vector<double>& grad,
                        std::vector<double>* g_par, std::vector<double>* g_perp) {
  if (!all_finite(grad)) throw std::invalid_argument("decompose_gradient: non-finite gradient");
  if (op.memory() == 0) {
    g_par->assign(grad.size(), 0.0);
    *g_perp = grad;
    return;
  }
  if (grad.size() != op.dim())
    throw std::invalid_argument("decompose_gradient: dimension mismatch");
  const std::vector<double> z = mat_tvec(op.vtilde, grad);
  *g_par = mat_vec(op.vtilde, z);
  g_perp->resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) (*g_perp)[i] = grad[i] - (*g_par)[i];
}

std::vector<double> search_direction(const TruncatedOperator& op, const std::vector<double>& grad) {
  if (!all_finite(grad)) throw std::invalid_argument("search_direction: non-finite gradient");
  std::vector<double> p(grad.size());
  if (op.memory() == 0) {
    for (std::size_t i = 0; i < grad.size(); ++i) p[i] = -op.rho * grad[i];
    return p;
  }
  if (grad.size() != op.dim())
    throw std::invalid_argument("search_direction: dimension mismatch");
  const std::vector<double> z = mat_tvec(op.vtilde, grad);
  std::vector<double> zi(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) zi[i] = op.inv_eig[i] * z[i];
  const std::vector<double> newton_part = mat_vec(op.vtilde, zi);
  const std::vector<double> proj = mat_vec(op.vtilde, z);
  for (std::size_t i = 0; i < grad.size(); ++i)
    p[i] = -newton_part[i] - op.rho * (grad[i] - proj[i]);
  return p;
}

namespace {

void validate_config(const Objective& obj, const SoniaConfig& cfg) {
  if (cfg.memory > obj.dim())
    throw std::invalid_argument("SoniaConfig: memory exceeds problem dimension");
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("SoniaConfig: eps must be positive");
  if (cfg.gtol < 0.0) throw std::invalid_argument("SoniaConfig: gtol must be nonnegative");
}

struct SoniaProvider {
  const Objective& obj;
  const SoniaConfig& cfg;
  Rng rng;
  TruncatedOperator op;

  SoniaProvider(const Objective& o, const SoniaConfig& c) : obj(o), cfg(c), rng(c.seed) {}

  const TruncatedOperator* direction(std::int64_t, const std::vector<double>& w,
                                     const std::vector<double>& g, EvalCounters& cnt,
                                     std::vector<double>& p) {
    if (cfg.memory == 0) {
      op = TruncatedOperator{};
      op.eps = cfg.eps;
      op.rho = 1.0;
    } else {
      CurvatureBlock block;
      block.s = sample_directions(obj.dim(), cfg.memory, rng);
      block.y = obj.hess_mat(w, block.s);
      cnt.hess_col_passes += static_cast<double>(cfg.memory);
      block.sty = matmul_tn(block.s, block.y);
      op = build_operator(block, cfg.eps, cfg.rho_rule);
    }
    p = search_direction(op, g);
    return &op;
  }

  void after_step(const std::vector<double>&, const std::vector<double>&,
                  const std::vector<double>&, const std::vector<double>&) {}
};

}  // namespace

RunResult run_deterministic(const Objective& obj, const SoniaConfig& cfg, std::vector<double> w0,
                            const RunHooks& hooks) {
  validate_config(obj, cfg);
  SoniaProvider provider(obj, cfg);
  return detail::descent_loop(obj, cfg.step, std::move(w0), cfg.max_iters, cfg.gtol, hooks,
                              provider);
}

RunResult run_stochastic(const Objective& obj, const SoniaConfig& cfg, std::vector<double> w0,
                         const RunHooks& hooks) {
  validate_config(obj, cfg);
  if (cfg.step.is_armijo())
    throw std::invalid_argument("run_stochastic: requires a fixed step length");
  const std::size_t n = obj.num_samples();
  const std::size_t d = obj.dim();
  if (cfg.batch_grad < 1 || cfg.batch_grad > n)
    throw std::invalid_argument("run_stochastic: gradient batch size out of range");
  if (cfg.memory > 0 && (cfg.batch_hess < 1 || cfg.batch_hess > n))
    throw std::invalid_argument("run_stochastic: curvature batch size out of range");
  if (w0.size() != d) throw std::invalid_argument("run: w0 has wrong dimension");
  if (!all_finite(w0)) throw std::invalid_argument("run: w0 is non-finite");

  const double alpha = cfg.step.fixed_alpha();
  const std::int64_t iters_per_epoch =
      static_cast<std::int64_t>((n + cfg.batch_grad - 1) / cfg.batch_grad);

  RunResult out;
  EvalCounters& cnt = out.state.counters;
  std::vector<double> w = std::move(w0);

  // Directions and batch sampling use separate streams so that a full-batch
  // stochastic run consumes the direction stream exactly like the
  // deterministic driver.
  Rng rng_dir(cfg.seed);
  Rng rng_batch(cfg.seed ^ 0x9E3779B97F4A7C15ull);

  const double grad_cost = static_cast<double>(cfg.batch_grad) / static_cast<double>(n);
  const double hess_cost = cfg.memory == 0
                               ? 0.0
                               : static_cast<double>(cfg.memory) *
                                     static_cast<double>(cfg.batch_hess) / static_cast<double>(n);

  IndexSet batch = rng_batch.sample_without_replacement(n, cfg.batch_grad);
  const IndexSet* batch_ptr = cfg.batch_grad == n ? nullptr : &batch;
  std::vector<double> g = obj.gradient(w, batch_ptr);
  cnt.grad_passes += grad_cost;

  TruncatedOperator op;
  std::vector<double> p;
  const double qnan = std::numeric_limits<double>::quiet_NaN();
  for (std::int64_t k = 0;; ++k) {
    const bool boundary = (k % iters_per_epoch) == 0;
    const bool budget_done = k >= cfg.max_iters;
    if (boundary || budget_done) {
      // Epoch-boundary bookkeeping: full objective and gradient, reported in
      // the trace but excluded from the effective-pass ledger.
      const double f_full = obj.value(w);
      const std::vector<double> g_full = obj.gradient(w);
      const double gnorm = norm2(g_full);
      const double acc = hooks.accuracy ? hooks.accuracy(w) : 0.0;
      const bool bad = !std::isfinite(f_full) || !all_finite(g_full);
      const bool terminal = budget_done || bad || gnorm <= cfg.gtol;
      out.trace.push_back({k, cnt.total(), f_full, gnorm, terminal ? 0.0 : alpha, acc});
      if (terminal) {
        out.reason = bad ? TermReason::non_finite
                         : (gnorm <= cfg.gtol ? TermReason::converged : TermReason::max_iters);
        if (bad) out.message = "non-finite objective or gradient at iteration " + std::to_string(k);
        out.final_f = f_full;
        break;
      }
    }

    if (cfg.memory == 0) {
      op = TruncatedOperator{};
      op.eps = cfg.eps;
      op.rho = 1.0;
    } else {
      CurvatureBlock block;
      IndexSet hess_batch = rng_batch.sample_without_replacement(n, cfg.batch_hess);
      const IndexSet* hess_ptr = cfg.batch_hess == n ? nullptr : &hess_batch;
      block.s = sample_directions(d, cfg.memory, rng_dir);
      block.y = obj.hess_mat(w, block.s, hess_ptr);
      cnt.hess_col_passes += hess_cost;
      block.sty = matmul_tn(block.s, block.y);
      op = build_operator(block, cfg.eps, cfg.rho_rule);
    }
    p = search_direction(op, g);
    if (hooks.observer) hooks.observer(IterationInfo{k, &w, &g, &op, &p, alpha, qnan});

    for (std::size_t i = 0; i < d; ++i) w[i] += alpha * p[i];
    if (!all_finite(w)) {
      out.trace.push_back({k + 1, cnt.total(), qnan, qnan, 0.0, 0.0});
      out.reason = TermReason::non_finite;
      out.message = "iterate diverged at iteration " + std::to_string(k);
      out.final_f = qnan;
      break;
    }
    out.state.iter = k + 1;

    batch = rng_batch.sample_without_replacement(n, cfg.batch_grad);
    g = obj.gradient(w, batch_ptr);
    cnt.grad_passes += grad_cost;
  }

  out.state.w = std::move(w);
  out.state.grad = std::move(g);
  return out;
}

}  // namespace sonia
