#include "dircs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "csv_util.hpp"
#include "dircs/baselines.hpp"
#include "dircs/datagen.hpp"
#include "dircs/diagnostics.hpp"
#include "dircs/harness.hpp"
#include "dircs/tuning.hpp"

namespace fs = std::filesystem;

namespace dircs {

namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + cfg.out_dir + ": " + ec.message());
  return (fs::path(cfg.out_dir) / name).string();
}

bool has_truth(const std::vector<NodeDataset>& datasets) {
  return std::all_of(datasets.begin(), datasets.end(),
                     [](const NodeDataset& d) { return d.truth && d.truth->beta.size() == d.p(); });
}

std::vector<double> sls_cosines(const std::vector<NodeDataset>& datasets) {
  std::vector<double> out;
  out.reserve(datasets.size());
  for (const auto& d : datasets) out.push_back(abs_cosine(sls(d), d.truth->beta));
  return out;
}

// Adjust m and p to whatever was actually loaded.
ProblemConfig fit_to_data(ProblemConfig c, const std::vector<NodeDataset>& datasets) {
  if (static_cast<int>(datasets.size()) != c.m) c.node_epochs.clear();
  c.m = static_cast<int>(datasets.size());
  c.p = static_cast<int>(datasets.front().p());
  return c;
}

std::string scenario_label(SweepKind kind, double value) {
  if (kind == SweepKind::None) return "base";
  return std::string(sweep_name(kind)) + "=" + csv::fmt(value);
}

}  // namespace

MethodResult run_method(const std::string& method, const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                        RunOptions options) {
  MethodResult r;
  r.method = method;
  if (method == "dir" || method == "cir") {
    r.lambda = config.lambda;
    RunTrace t = method == "dir" ? run_dir(config, datasets, {}, options) : run_cir(config, datasets, {}, options);
    r.estimates = t.estimates;
    r.trace = std::move(t);
  } else if (method == "sls") {
    for (const auto& d : datasets) r.estimates.push_back(sls(d));
  } else if (method == "pls") {
    const SignalVector pooled = pls(datasets);
    r.estimates.assign(datasets.size(), pooled);
  } else if (method == "drd") {
    fail(ErrorCode::ConfigError, "method id 'drd' is reserved; this baseline is not implemented");
  } else {
    fail(ErrorCode::ConfigError, "unknown method '" + method + "'");
  }
  return r;
}

std::vector<NodeEvaluation> evaluate(const MethodResult& result, const std::vector<NodeDataset>& datasets,
                                     const std::vector<double>& sls_cos) {
  if (result.estimates.size() != datasets.size() || sls_cos.size() != datasets.size()) {
    fail(ErrorCode::MismatchedNodes, "evaluation inputs differ in node count");
  }
  std::vector<NodeEvaluation> out;
  for (std::size_t j = 0; j < datasets.size(); ++j) {
    const auto& truth = *datasets[j].truth;
    NodeEvaluation e;
    e.node_id = static_cast<int>(j);
    e.method = result.method;
    e.l2_error = l2_error(result.estimates[j], truth.beta, truth.q);
    e.abs_cosine = abs_cosine(result.estimates[j], truth.beta);
    e.improved = result.method != "sls" && e.abs_cosine > sls_cos[j];
    out.push_back(std::move(e));
  }
  return out;
}

void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "scenario_id,rep,node_id,method,lambda,l2_error,abs_cosine,improved\n";
  for (const auto& r : rows) {
    out << r.scenario_id << ',' << r.rep << ',' << r.eval.node_id << ',' << r.eval.method << ',' << csv::fmt(r.lambda)
        << ',' << csv::fmt(r.eval.l2_error) << ',' << csv::fmt(r.eval.abs_cosine) << ',' << (r.eval.improved ? 1 : 0)
        << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

std::vector<EvalRow> read_eval_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (csv::trim(line) != "scenario_id,rep,node_id,method,lambda,l2_error,abs_cosine,improved") {
    fail(ErrorCode::ConfigError, path + ": unexpected evaluation header");
  }
  std::vector<EvalRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::blank(line)) continue;
    const auto f = csv::split(line);
    if (f.size() != 8) fail(ErrorCode::ConfigError, path + ":" + std::to_string(line_no) + ": expected 8 fields");
    EvalRow r;
    r.scenario_id = f[0];
    r.rep = static_cast<int>(csv::to_double(f[1], path, line_no));
    r.eval.node_id = static_cast<int>(csv::to_double(f[2], path, line_no));
    r.eval.method = f[3];
    r.lambda = csv::to_double(f[4], path, line_no);
    r.eval.l2_error = csv::to_double(f[5], path, line_no);
    r.eval.abs_cosine = csv::to_double(f[6], path, line_no);
    r.eval.improved = csv::to_double(f[7], path, line_no) != 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_estimates_csv(const std::vector<SignalVector>& estimates, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  const Eigen::Index p = estimates.empty() ? 0 : estimates.front().size();
  out << "node_id";
  for (Eigen::Index k = 0; k < p; ++k) out << ",beta_" << k + 1;
  out << '\n';
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    out << j;
    for (Eigen::Index k = 0; k < estimates[j].size(); ++k) out << ',' << csv::fmt(estimates[j](k));
    out << '\n';
  }
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRow>& rows) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, std::string> key{r.scenario_id, r.eval.method};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<AggregateRow> out;
  for (const auto& [sid, method] : keys) {
    std::vector<double> l2;
    std::vector<double> cs;
    int improved = 0;
    for (const auto& r : rows) {
      if (r.scenario_id != sid || r.eval.method != method) continue;
      l2.push_back(r.eval.l2_error);
      cs.push_back(r.eval.abs_cosine);
      improved += r.eval.improved;
    }
    AggregateRow a;
    a.scenario_id = sid;
    a.method = method;
    a.count = static_cast<int>(l2.size());
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    a.mean_l2 = mean(l2);
    a.q1_l2 = quantile(l2, 0.25);
    a.median_l2 = quantile(l2, 0.5);
    a.q3_l2 = quantile(l2, 0.75);
    a.mean_cos = mean(cs);
    a.q1_cos = quantile(cs, 0.25);
    a.median_cos = quantile(cs, 0.5);
    a.q3_cos = quantile(cs, 0.75);
    a.improved_ratio = static_cast<double>(improved) / static_cast<double>(a.count);
    out.push_back(a);
  }
  return out;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "scenario_id,method,count,mean_l2,q1_l2,median_l2,q3_l2,mean_cos,q1_cos,median_cos,q3_cos,improved_ratio\n";
  for (const auto& a : rows) {
    out << a.scenario_id << ',' << a.method << ',' << a.count << ',' << csv::fmt(a.mean_l2) << ',' << csv::fmt(a.q1_l2)
        << ',' << csv::fmt(a.median_l2) << ',' << csv::fmt(a.q3_l2) << ',' << csv::fmt(a.mean_cos) << ','
        << csv::fmt(a.q1_cos) << ',' << csv::fmt(a.median_cos) << ',' << csv::fmt(a.q3_cos) << ','
        << csv::fmt(a.improved_ratio) << '\n';
  }
}

std::vector<NodeDataset> load_or_generate(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.data_dir.empty()) {
    auto nodes = import_scenario(cfg.data_dir);
    log << "loaded " << nodes.size() << " nodes from " << cfg.data_dir << '\n';
    return nodes;
  }
  log << "generating scenario with seed " << cfg.problem.seed << '\n';
  return generate_scenario(cfg.problem, 0).nodes;
}

void cmd_gen(const ExperimentConfig& cfg, std::ostream& log) {
  const Scenario sc = generate_scenario(cfg.problem, 0);
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  export_scenario(sc, cfg.out_dir);
  log << "seed " << cfg.problem.seed << '\n';
  log << "wrote " << sc.nodes.size() << " node files and truth.csv to " << cfg.out_dir << '\n';
  log << "sizes";
  for (const auto& d : sc.nodes) log << ' ' << d.n();
  log << '\n';
}

void cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  const auto nodes = load_or_generate(cfg, log);
  const ProblemConfig pc = fit_to_data(cfg.problem, nodes);
  const MethodResult r = run_method(cfg.method, pc, nodes, {cfg.threads, cfg.snapshots});
  write_estimates_csv(r.estimates, out_path(cfg, "estimates.csv"));
  if (r.trace) {
    write_trace_csv(*r.trace, out_path(cfg, "trace.csv"));
    log << cfg.method << ": " << r.trace->rounds_executed << " rounds, stop=" << stop_reason_name(r.trace->stop)
        << ", objective=" << csv::fmt(r.trace->records.back().objective) << ", comm_scalars=" << comm_cost(*r.trace)
        << '\n';
    std::ofstream diag(out_path(cfg, "diagnostics.csv"));
    diag << "node_id,corrected_ls_residual\n";
    for (int j = 0; j < pc.m; ++j) {
      diag << j << ',' << csv::fmt(corrected_ls_residual(j, r.estimates, nodes, pc.lambda)) << '\n';
    }
  }
  if (has_truth(nodes)) {
    const auto evals = evaluate(r, nodes, sls_cosines(nodes));
    std::vector<EvalRow> rows;
    double mean_cos = 0.0;
    double mean_l2 = 0.0;
    for (const auto& e : evals) {
      rows.push_back({"run", 0, r.lambda, e});
      mean_cos += e.abs_cosine / static_cast<double>(evals.size());
      mean_l2 += e.l2_error / static_cast<double>(evals.size());
    }
    write_eval_csv(rows, out_path(cfg, "eval.csv"));
    log << "mean abs_cosine " << csv::fmt(mean_cos) << ", mean l2_error " << csv::fmt(mean_l2) << '\n';
  } else {
    log << "no ground truth; eval.csv not written\n";
  }
}

void cmd_tune(const ExperimentConfig& cfg, std::ostream& log) {
  const auto nodes = load_or_generate(cfg, log);
  const ProblemConfig pc = fit_to_data(cfg.problem, nodes);
  const SplitData split = split_all(nodes, pc.validation_fraction, pc.seed);
  const RunOptions opts{cfg.threads, false};
  const TuneReport warm = warm_start_tune(pc.lambda_grid, split, pc, opts);
  write_tune_csv(warm, out_path(cfg, "tune.csv"));
  write_estimates_csv(warm.estimates, out_path(cfg, "estimates.csv"));
  log << "warm-start: lambda*=" << csv::fmt(warm.chosen_lambda) << " best_accuracy=" << csv::fmt(warm.best_accuracy)
      << " rounds=" << warm.path_rounds << "+" << warm.retrain_rounds << " wall_ms=" << csv::fmt(warm.wall_ms) << '\n';
  if (cfg.compare_separate) {
    const TuneReport sep = separate_tune(pc.lambda_grid, split, pc, opts);
    write_tune_csv(sep, out_path(cfg, "tune_separate.csv"));
    log << "separate:   lambda*=" << csv::fmt(sep.chosen_lambda) << " best_accuracy=" << csv::fmt(sep.best_accuracy)
        << " rounds=" << sep.path_rounds << " wall_ms=" << csv::fmt(sep.wall_ms) << '\n';
  }
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<double> values = cfg.sweep == SweepKind::None ? std::vector<double>{0.0} : cfg.sweep_values;
  struct Task {
    std::size_t scenario;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < values.size(); ++s) {
    for (int r = 0; r < cfg.replications; ++r) tasks.push_back({s, r});
  }
  struct Failure {
    std::string scenario_id;
    int rep;
    std::string method;
    std::string error;
  };
  std::vector<std::vector<EvalRow>> results(tasks.size());
  std::vector<std::vector<Failure>> failures(tasks.size());

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const std::string sid = scenario_label(cfg.sweep, values[task.scenario]);
    const ProblemConfig pc = apply_sweep(cfg.problem, cfg.sweep, values[task.scenario]);
    try {
      const Scenario sc = generate_scenario(pc, static_cast<std::uint64_t>(task.rep));
      const auto sls_cos = sls_cosines(sc.nodes);
      for (const auto& method : cfg.methods) {
        try {
          const MethodResult r = run_method(method, pc, sc.nodes);
          for (const auto& e : evaluate(r, sc.nodes, sls_cos)) results[t].push_back({sid, task.rep, r.lambda, e});
        } catch (const Error& e) {
          failures[t].push_back({sid, task.rep, method, std::string(error_code_name(e.code())) + ": " + e.what()});
        }
      }
    } catch (const Error& e) {
      failures[t].push_back({sid, task.rep, "*", std::string(error_code_name(e.code())) + ": " + e.what()});
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
  };
  const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<EvalRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  write_eval_csv(rows, out_path(cfg, "eval.csv"));
  const auto agg = aggregate(rows);
  write_aggregate_csv(agg, out_path(cfg, "aggregate.csv"));
  std::ofstream fout(out_path(cfg, "failures.csv"));
  fout << "scenario_id,rep,method,error\n";
  std::size_t n_fail = 0;
  for (const auto& fs_ : failures) {
    for (const auto& f : fs_) {
      fout << f.scenario_id << ',' << f.rep << ',' << f.method << ",\"" << f.error << "\"\n";
      ++n_fail;
    }
  }
  for (const auto& a : agg) {
    log << a.scenario_id << ' ' << a.method << ": mean_l2=" << csv::fmt(a.mean_l2)
        << " median_cos=" << csv::fmt(a.median_cos) << " improved=" << csv::fmt(a.improved_ratio) << '\n';
  }
  log << rows.size() << " node rows, " << n_fail << " failures\n";
}

void cmd_serve(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.data_dir.empty()) fail(ErrorCode::ConfigError, "serve needs data_dir (used to evaluate the objective)");
  const auto nodes = import_scenario(cfg.data_dir);
  const ProblemConfig pc = fit_to_data(cfg.problem, nodes);
  SocketServerTransport transport(nodes.size(), cfg.host, static_cast<std::uint16_t>(cfg.port),
                                  std::chrono::milliseconds(cfg.timeout_ms));
  log << "listening on " << cfg.host << ':' << transport.port() << " for " << nodes.size() << " nodes" << std::endl;
  const RunTrace trace = run_dir_over(pc, nodes, transport, {1, cfg.snapshots});
  write_trace_csv(trace, out_path(cfg, "trace.csv"));
  write_estimates_csv(trace.estimates, out_path(cfg, "estimates.csv"));
  log << "dir over sockets: " << trace.rounds_executed << " rounds, stop=" << stop_reason_name(trace.stop)
      << ", comm_scalars=" << comm_cost(trace) << ", bytes=" << transport.counters().bytes_sent << '\n';
  if (has_truth(nodes)) {
    MethodResult r{"dir", pc.lambda, trace.estimates, trace};
    std::vector<EvalRow> rows;
    for (const auto& e : evaluate(r, nodes, sls_cosines(nodes))) rows.push_back({"serve", 0, pc.lambda, e});
    write_eval_csv(rows, out_path(cfg, "eval.csv"));
  }
}

void cmd_node(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.data_dir.empty()) fail(ErrorCode::ConfigError, "node needs data_dir");
  int m = 0;
  while (fs::exists(fs::path(cfg.data_dir) / ("node_" + std::to_string(m) + ".csv"))) ++m;
  if (cfg.node_id >= m) {
    fail(ErrorCode::ConfigError, "node_id " + std::to_string(cfg.node_id) + " has no file in " + cfg.data_dir);
  }
  NodeDataset ds =
      import_node_file((fs::path(cfg.data_dir) / ("node_" + std::to_string(cfg.node_id) + ".csv")).string());
  ProblemConfig pc = cfg.problem;
  if (pc.m != m) pc.node_epochs.clear();
  pc.m = m;
  const SignalVector init = ds.xy;
  NodeWorker worker(static_cast<std::uint32_t>(cfg.node_id), std::move(ds), local_params(pc, cfg.node_id), init);
  const auto handled =
      run_socket_node(worker, cfg.host, static_cast<std::uint16_t>(cfg.port), std::chrono::milliseconds(cfg.timeout_ms));
  log << "node " << cfg.node_id << " handled " << handled << " rounds" << '\n';
}

bool cmd_check(const ExperimentConfig& cfg, std::ostream& log) {
  const auto reports = run_check_suite(cfg.problem, cfg.check_instances, cfg.init_count);
  write_check_csv(reports, out_path(cfg, "check.csv"));
  bool ok = true;
  for (const auto& r : reports) {
    log << r.name << ": " << check_status_name(r.status) << " (instances=" << r.instances
        << ", max_deviation=" << csv::fmt(r.max_deviation) << ") " << r.detail << '\n';
    if (r.status == CheckStatus::Fail) ok = false;
  }
  return ok;
}

}  // namespace dircs
