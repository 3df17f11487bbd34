#include "sonia/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sonia/baselines.hpp"

#ifndef SONIA_VERSION_STRING
#define SONIA_VERSION_STRING "0.1.0-unknown"
#endif

namespace sonia {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version_string() { return SONIA_VERSION_STRING; }

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " value: '" + s + "'");
  }
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " value: '" + s + "'");
  }
}

std::string normalize_key(std::string k) {
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

// Per-cell hyper-parameter override.
void apply_grid_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = normalize_key(key);
  if (k == "lambda")
    cfg.lambda = parse_double(value, "lambda");
  else if (k == "memory")
    cfg.memory = parse_size(value, "memory");
  else if (k == "eps")
    cfg.eps = parse_double(value, "eps");
  else if (k == "alpha") {
    cfg.armijo = false;
    cfg.fixed_alpha = parse_double(value, "alpha");
  } else if (k == "batch_grad")
    cfg.batch_grad = parse_size(value, "batch_grad");
  else if (k == "batch_hess")
    cfg.batch_hess = parse_size(value, "batch_hess");
  else if (k == "rho")
    cfg.rho_rule = rho_rule_from_string(value);
  else
    throw std::invalid_argument("unknown grid key: " + key);
}

struct GridCell {
  std::size_t id = 0;
  std::vector<std::pair<std::string, std::string>> params;
};

std::vector<GridCell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells{{0, {}}};
  for (const auto& [key, values] : cfg.grid) {
    if (values.empty()) throw std::invalid_argument("empty grid axis: " + key);
    std::vector<GridCell> next;
    for (const GridCell& cell : cells)
      for (const std::string& v : values) {
        GridCell c = cell;
        c.params.emplace_back(key, v);
        next.push_back(std::move(c));
      }
    cells = std::move(next);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = i;
  return cells;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iter,passes,f,gnorm,alpha,test_acc\n";
  char buf[256];
  for (const TraceRecord& r : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.iter), r.passes, r.f, r.gnorm, r.alpha,
                  r.test_accuracy);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

RunResult dispatch_run(const ExperimentConfig& cfg, const Objective& obj,
                       const RunHooks& hooks, std::uint64_t seed) {
  const std::size_t d = obj.dim();
  const StepRule step =
      cfg.armijo ? StepRule::armijo_rule() : StepRule::fixed(cfg.fixed_alpha);
  const std::size_t n = obj.num_samples();
  const std::int64_t iters_per_epoch =
      cfg.batch_grad > 0 ? static_cast<std::int64_t>((n + cfg.batch_grad - 1) / cfg.batch_grad)
                         : 1;

  std::vector<double> w0(d, 0.0);
  if (cfg.optimizer == "sonia") {
    SoniaConfig sc;
    sc.memory = std::min(cfg.memory, d);
    sc.eps = cfg.eps;
    sc.rho_rule = cfg.rho_rule;
    sc.step = step;
    sc.gtol = cfg.gtol;
    sc.seed = seed;
    if (cfg.batch_grad > 0) {
      sc.batch_grad = cfg.batch_grad;
      sc.batch_hess = cfg.batch_hess > 0 ? cfg.batch_hess : cfg.batch_grad;
      sc.max_iters = cfg.epochs * iters_per_epoch;
      return run_stochastic(obj, sc, std::move(w0), hooks);
    }
    sc.max_iters = cfg.epochs;
    return run_deterministic(obj, sc, std::move(w0), hooks);
  }
  if (cfg.optimizer == "gd") return gd_run(obj, step, std::move(w0), cfg.epochs, cfg.gtol, hooks);
  if (cfg.optimizer == "lbfgs")
    return lbfgs_run(obj, cfg.memory, step, std::move(w0), cfg.epochs, cfg.gtol, hooks);
  if (cfg.optimizer == "sgd") {
    if (cfg.armijo) throw std::invalid_argument("sgd requires --step fixed:ALPHA");
    const std::size_t batch = cfg.batch_grad > 0 ? cfg.batch_grad : 16;
    return sgd_run(obj, cfg.fixed_alpha, batch, std::move(w0), cfg.epochs, seed, hooks);
  }
  throw std::invalid_argument("unknown optimizer: " + cfg.optimizer);
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["problem"] = to_string(problem);
  if (!data_path.empty()) j["data"] = data_path;
  if (synth) j["synth"] = {{"n", synth->n}, {"d", synth->d}, {"kappa", synth->kappa}};
  if (dim_override > 0) j["dim_override"] = dim_override;
  j["lambda"] = lambda;
  j["optimizer"] = optimizer;
  j["memory"] = memory;
  j["eps"] = eps;
  j["rho"] = to_string(rho_rule);
  if (armijo)
    j["step"] = "armijo";
  else
    j["step"] = "fixed:" + fmt_double(fixed_alpha);
  j["batch_grad"] = batch_grad;
  j["batch_hess"] = batch_hess;
  j["epochs"] = epochs;
  j["gtol"] = gtol;
  j["test_fraction"] = test_fraction;
  j["seeds"] = seeds;
  j["grid"] = grid;
  j["out"] = out_dir;
  j["workers"] = workers;
  j["allow_divergence"] = allow_divergence;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("problem")) cfg.problem = problem_kind_from_string(j["problem"].get<std::string>());
  if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
  if (j.contains("synth")) {
    SynthSpec s;
    s.n = j["synth"].at("n").get<std::size_t>();
    s.d = j["synth"].at("d").get<std::size_t>();
    s.kappa = j["synth"].at("kappa").get<double>();
    cfg.synth = s;
  }
  if (j.contains("dim_override")) cfg.dim_override = j["dim_override"].get<std::size_t>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("optimizer")) cfg.optimizer = j["optimizer"].get<std::string>();
  if (j.contains("memory")) cfg.memory = j["memory"].get<std::size_t>();
  if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
  if (j.contains("rho")) cfg.rho_rule = rho_rule_from_string(j["rho"].get<std::string>());
  if (j.contains("step")) {
    const std::string s = j["step"].get<std::string>();
    if (s == "armijo") {
      cfg.armijo = true;
    } else if (s.rfind("fixed:", 0) == 0) {
      cfg.armijo = false;
      cfg.fixed_alpha = parse_double(s.substr(6), "step");
    } else {
      throw std::invalid_argument("bad step spec: " + s);
    }
  }
  if (j.contains("batch_grad")) cfg.batch_grad = j["batch_grad"].get<std::size_t>();
  if (j.contains("batch_hess")) cfg.batch_hess = j["batch_hess"].get<std::size_t>();
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::int64_t>();
  if (j.contains("gtol")) cfg.gtol = j["gtol"].get<double>();
  if (j.contains("test_fraction")) cfg.test_fraction = j["test_fraction"].get<double>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("grid"))
    cfg.grid = j["grid"].get<std::map<std::string, std::vector<std::string>>>();
  if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
  if (j.contains("allow_divergence")) cfg.allow_divergence = j["allow_divergence"].get<bool>();
  return cfg;
}

ReferenceOptimum compute_reference_optimum(const Objective& obj) {
  // Chunked so a run parked at the floating-point floor stops early instead
  // of burning its full backtracking budget every iteration until the cap.
  const std::int64_t cap = 10000, chunk = 250;
  std::vector<double> w(obj.dim(), 0.0);
  double f_prev = std::numeric_limits<double>::infinity();
  ReferenceOptimum out;
  for (std::int64_t used = 0; used < cap; used += chunk) {
    const RunResult res = lbfgs_run(obj, 64, StepRule::armijo_rule(), std::move(w),
                                    std::min(chunk, cap - used), 1e-12);
    w = res.state.w;
    out.fstar = res.final_f;
    out.exact = res.reason == TermReason::converged;
    if (out.exact || res.reason == TermReason::line_search_failed ||
        res.reason == TermReason::non_finite)
      break;
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(res.final_f));
    if (f_prev - res.final_f <= floor) break;  // stagnated
    f_prev = res.final_f;
  }
  return out;
}

ReferenceOptimum compute_reference_optimum(const ErmObjective& obj) {
  if (obj.spec().kind != ProblemKind::logistic || !(obj.spec().lambda > 0.0))
    throw std::invalid_argument(
        "compute_reference_optimum: needs a strongly convex problem (logistic, lambda > 0)");
  return compute_reference_optimum(static_cast<const Objective&>(obj));
}

ExperimentReport run_experiment(const ExperimentConfig& base) {
  const auto t_start = std::chrono::steady_clock::now();
  if (base.seeds.empty()) throw std::invalid_argument("run_experiment: need at least one seed");
  if (base.epochs <= 0) throw std::invalid_argument("run_experiment: budget must be positive");
  if (!base.data_path.empty() && base.synth)
    throw std::invalid_argument("run_experiment: give either a data file or a synth spec");

  // Data: load or synthesize, then a seeded shuffle split shared by all cells.
  Dataset full = [&] {
    if (!base.data_path.empty()) return load_libsvm(base.data_path, base.problem, base.dim_override);
    if (!base.synth) throw std::invalid_argument("run_experiment: no data source");
    return synth_logistic(base.synth->n, base.synth->d, base.synth->kappa, base.seeds[0])
        .relabeled(base.problem);
  }();
  auto [train_raw, test_raw] = split(full, base.test_fraction, base.seeds[0]);
  auto train = std::make_shared<const Dataset>(std::move(train_raw));
  auto test = std::make_shared<const Dataset>(std::move(test_raw));

  const std::vector<GridCell> cells = expand_grid(base);
  fs::create_directories(base.out_dir);

  struct Task {
    std::size_t cell_index;
    std::uint64_t seed;
    ExperimentConfig cfg;
  };
  std::vector<Task> tasks;
  for (const GridCell& cell : cells)
    for (std::uint64_t seed : base.seeds) {
      ExperimentConfig cfg = base;
      for (const auto& [k, v] : cell.params) apply_grid_value(cfg, k, v);
      tasks.push_back({cell.id, seed, std::move(cfg)});
    }

  // Reference optimum per distinct regularizer (strongly convex cells only).
  std::map<double, ReferenceOptimum> fstar;
  if (base.problem == ProblemKind::logistic) {
    std::set<double> lambdas;
    for (const Task& t : tasks)
      if (t.cfg.lambda > 0.0) lambdas.insert(t.cfg.lambda);
    for (double lam : lambdas) {
      ErmObjective ref(ProblemSpec(base.problem, lam, train));
      fstar[lam] = compute_reference_optimum(ref);
    }
  }

  std::vector<CellResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      CellResult& res = results[i];
      res.cell = task.cell_index;
      res.seed = task.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const ExperimentConfig& cfg = task.cfg;
        ProblemSpec spec(cfg.problem, cfg.problem == ProblemKind::logistic ? cfg.lambda : 0.0,
                         train);
        ErmObjective obj(spec);
        RunHooks hooks;
        const Dataset& acc_data = test->rows() > 0 ? *test : *train;
        hooks.accuracy = [&acc_data, kind = cfg.problem](const std::vector<double>& w) {
          return classification_accuracy(acc_data, kind, w);
        };
        const RunResult run = dispatch_run(cfg, obj, hooks, task.seed);

        const std::string name = cfg.optimizer + "_cell" + std::to_string(task.cell_index) +
                                 "_seed" + std::to_string(task.seed) + ".csv";
        const std::string path = (fs::path(cfg.out_dir) / name).string();
        write_trace_csv(path, run.trace);

        res.trace_file = name;
        res.final_f = run.final_f;
        res.final_gnorm = run.trace.back().gnorm;
        res.final_test_accuracy = run.trace.back().test_accuracy;
        res.reason = to_string(run.reason);
        res.failed = run.reason == TermReason::non_finite;
        if (!run.message.empty()) res.reason += ": " + run.message;
      } catch (const std::exception& e) {
        res.failed = true;
        res.reason = std::string("error: ") + e.what();
        res.final_f = std::numeric_limits<double>::quiet_NaN();
      }
      res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    }
  };
  const int nworkers = std::max(1, std::min<int>(base.workers, static_cast<int>(tasks.size())));
  {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (int t = 0; t < nworkers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ExperimentReport report;
  report.results = results;
  for (const CellResult& r : results)
    if (r.failed && !base.allow_divergence) report.all_ok = false;

  // Best cell by mean final objective across seeds.
  std::map<std::size_t, std::pair<double, int>> by_cell;
  for (const CellResult& r : results)
    if (!r.failed) {
      auto& [sum, count] = by_cell[r.cell];
      sum += r.final_f;
      ++count;
    }
  std::int64_t best_cell = -1;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& [cell, agg] : by_cell) {
    const double mean = agg.first / agg.second;
    if (mean < best_f) {
      best_f = mean;
      best_cell = static_cast<std::int64_t>(cell);
    }
  }

  json manifest;
  manifest["version"] = version_string();
  manifest["config"] = json::parse(base.to_json());
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  manifest["train_rows"] = train->rows();
  manifest["test_rows"] = test->rows();
  json jcells = json::array();
  for (const GridCell& cell : cells) {
    json jc;
    jc["id"] = cell.id;
    json params = json::object();
    for (const auto& [k, v] : cell.params) params[k] = v;
    jc["params"] = params;
    jcells.push_back(jc);
  }
  manifest["cells"] = jcells;
  json jruns = json::array();
  for (const CellResult& r : results) {
    json jr;
    jr["cell"] = r.cell;
    jr["seed"] = r.seed;
    jr["file"] = r.trace_file;
    jr["final_f"] = std::isfinite(r.final_f) ? json(r.final_f) : json();
    jr["final_gnorm"] = std::isfinite(r.final_gnorm) ? json(r.final_gnorm) : json();
    jr["final_test_accuracy"] = r.final_test_accuracy;
    jr["reason"] = r.reason;
    jr["failed"] = r.failed;
    jr["wall_ms"] = r.wall_ms;
    jruns.push_back(jr);
  }
  manifest["runs"] = jruns;
  if (best_cell >= 0) manifest["best_cell"] = best_cell;
  if (!fstar.empty()) {
    json jf = json::object();
    for (const auto& [lam, ref] : fstar)
      jf[fmt_double(lam)] = {{"fstar", ref.fstar}, {"exact", ref.exact}};
    manifest["reference_optimum"] = jf;
  }

  const std::string manifest_path =
      (fs::path(base.out_dir) / ("manifest_" + base.optimizer + ".json")).string();
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write " + manifest_path);
  mf << manifest.dump(2) << "\n";
  report.manifest_path = manifest_path;
  return report;
}

namespace {

struct TraceSummary {
  std::vector<TraceRecord> rows;
};

TraceSummary read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TraceSummary t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace " + path);
  if (line.rfind("iter,", 0) != 0) throw std::runtime_error("bad trace header in " + path);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceRecord r;
    long long it = 0;
    if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg,%lg", &it, &r.passes, &r.f, &r.gnorm,
                    &r.alpha, &r.test_accuracy) != 6)
      throw std::runtime_error("bad trace row at " + path + ":" + std::to_string(line_no));
    r.iter = it;
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace

std::string emit_summary(const std::string& trace_dir) {
  if (!fs::is_directory(trace_dir))
    throw std::runtime_error("not a directory: " + trace_dir);

  // Collect manifests (for reference optima) and trace files per optimizer.
  double fstar = std::numeric_limits<double>::infinity();
  bool have_fstar = false;
  std::map<std::string, std::vector<std::string>> traces;  // optimizer -> files
  std::vector<std::string> problems;

  for (const auto& entry : fs::directory_iterator(trace_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) == 0 && entry.path().extension() == ".json") {
      try {
        std::ifstream in(entry.path());
        json m = json::parse(in);
        if (m.contains("reference_optimum"))
          for (const auto& [_, ref] : m["reference_optimum"].items()) {
            fstar = std::min(fstar, ref["fstar"].get<double>());
            have_fstar = true;
          }
      } catch (const std::exception& e) {
        problems.push_back(name + ": " + e.what());
      }
    } else if (entry.path().extension() == ".csv" && name != "summary.csv") {
      const std::size_t us = name.find('_');
      const std::string opt = us == std::string::npos ? name : name.substr(0, us);
      traces[opt].push_back(entry.path().string());
    }
  }

  // Without a certified reference, fall back to the best objective seen.
  std::map<std::string, std::vector<TraceSummary>> parsed;
  double min_final = std::numeric_limits<double>::infinity();
  for (auto& [opt, files] : traces) {
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      try {
        TraceSummary t = read_trace_csv(f);
        if (!t.rows.empty() && std::isfinite(t.rows.back().f))
          min_final = std::min(min_final, t.rows.back().f);
        parsed[opt].push_back(std::move(t));
      } catch (const std::exception& e) {
        problems.push_back(e.what());
      }
    }
  }
  if (!have_fstar) fstar = min_final;

  const double thresholds[3] = {1e-2, 1e-4, 1e-6};
  std::ostringstream out;
  out << "optimizer,passes_to_1e-2,passes_to_1e-4,passes_to_1e-6,final_test_acc\n";
  for (const auto& [opt, runs] : parsed) {  // std::map: deterministic order
    double to_thresh[3] = {std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
    double best_final = std::numeric_limits<double>::infinity();
    double final_acc = 0.0;
    for (const TraceSummary& t : runs) {
      if (t.rows.empty()) continue;
      for (int k = 0; k < 3; ++k)
        for (const TraceRecord& r : t.rows)
          if (std::isfinite(r.f) && r.f - fstar <= thresholds[k]) {
            to_thresh[k] = std::min(to_thresh[k], r.passes);
            break;
          }
      const TraceRecord& last = t.rows.back();
      if (std::isfinite(last.f) && last.f < best_final) {
        best_final = last.f;
        final_acc = last.test_accuracy;
      }
    }
    out << opt;
    for (double v : to_thresh) {
      if (std::isfinite(v))
        out << ',' << fmt_double(v);
      else
        out << ",\xE2\x80\x94";  // em dash for unreached thresholds
    }
    out << ',' << fmt_double(final_acc) << "\n";
  }
  for (const std::string& p : problems) out << "# problem: " << p << "\n";

  const std::string text = out.str();
  std::ofstream sf(fs::path(trace_dir) / "summary.csv", std::ios::binary);
  sf << text;
  return text;
}

}  // namespace sonia
