#include "sonia/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "descent_loop.hpp"
#include "sonia/optimizer.hpp"

namespace sonia {

LbfgsMemory::LbfgsMemory(std::size_t capacity, double guard)
    : capacity_(capacity), guard_(guard) {
  if (capacity < 1) throw std::invalid_argument("LbfgsMemory: capacity must be >= 1");
}

bool LbfgsMemory::add(const std::vector<double>& s, const std::vector<double>& y) {
  const double sy = dot(s, y);
  if (!(sy > guard_ * norm2(s) * norm2(y))) return false;
  pairs_.push_back({s, y, 1.0 / sy});
  if (pairs_.size() > capacity_) pairs_.pop_front();
  return true;
}

std::vector<double> LbfgsMemory::apply(const std::vector<double>& g) const {
  if (pairs_.empty()) return g;
  const std::size_t k = pairs_.size();
  std::vector<double> q = g;
  std::vector<double> a(k);
  for (std::size_t i = k; i-- > 0;) {
    const Pair& pr = pairs_[i];
    a[i] = pr.rho * dot(pr.s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= a[i] * pr.y[j];
  }
  const Pair& newest = pairs_.back();
  const double gamma = dot(newest.s, newest.y) / dot(newest.y, newest.y);
  for (double& qi : q) qi *= gamma;
  for (std::size_t i = 0; i < k; ++i) {
    const Pair& pr = pairs_[i];
    const double b = pr.rho * dot(pr.y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (a[i] - b) * pr.s[j];
  }
  return q;
}

namespace {

struct GdProvider {
  const TruncatedOperator* direction(std::int64_t, const std::vector<double>&,
                                     const std::vector<double>& g, EvalCounters&,
                                     std::vector<double>& p) {
    p.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) p[i] = -g[i];
    return nullptr;
  }
  void after_step(const std::vector<double>&, const std::vector<double>&,
                  const std::vector<double>&, const std::vector<double>&) {}
};

struct LbfgsProvider {
  LbfgsMemory memory;

  explicit LbfgsProvider(std::size_t m) : memory(m) {}

  const TruncatedOperator* direction(std::int64_t, const std::vector<double>&,
                                     const std::vector<double>& g, EvalCounters&,
                                     std::vector<double>& p) {
    p = memory.apply(g);
    double gp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      p[i] = -p[i];
      gp += g[i] * p[i];
    }
    if (!(gp < 0.0)) {
      // Degenerate memory; fall back to steepest descent.
      memory.clear();
      for (std::size_t i = 0; i < g.size(); ++i) p[i] = -g[i];
    }
    return nullptr;
  }

  void after_step(const std::vector<double>& w_old, const std::vector<double>& g_old,
                  const std::vector<double>& w_new, const std::vector<double>& g_new) {
    std::vector<double> s(w_new.size()), y(w_new.size());
    for (std::size_t i = 0; i < w_new.size(); ++i) {
      s[i] = w_new[i] - w_old[i];
      y[i] = g_new[i] - g_old[i];
    }
    memory.add(s, y);
  }
};

}  // namespace

RunResult gd_run(const Objective& obj, const StepRule& step, std::vector<double> w0,
                 std::int64_t max_iters, double gtol, const RunHooks& hooks) {
  GdProvider provider;
  return detail::descent_loop(obj, step, std::move(w0), max_iters, gtol, hooks, provider);
}

RunResult lbfgs_run(const Objective& obj, std::size_t memory, const StepRule& step,
                    std::vector<double> w0, std::int64_t max_iters, double gtol,
                    const RunHooks& hooks) {
  if (memory < 1) throw std::invalid_argument("lbfgs_run: memory must be >= 1");
  LbfgsProvider provider(memory);
  return detail::descent_loop(obj, step, std::move(w0), max_iters, gtol, hooks, provider);
}

RunResult sgd_run(const Objective& obj, double alpha, std::size_t batch, std::vector<double> w0,
                  std::int64_t epochs, std::uint64_t seed, const RunHooks& hooks) {
  const std::size_t n = obj.num_samples();
  if (batch < 1 || batch > n) throw std::invalid_argument("sgd_run: batch size out of range");
  const std::int64_t iters_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  SoniaConfig cfg;
  cfg.memory = 0;
  cfg.step = StepRule::fixed(alpha);
  cfg.batch_grad = batch;
  cfg.max_iters = epochs * iters_per_epoch;
  cfg.seed = seed;
  return run_stochastic(obj, cfg, std::move(w0), hooks);
}

}  // namespace sonia
