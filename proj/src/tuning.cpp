#include "dircs/tuning.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "csv_util.hpp"
#include "dircs/datagen.hpp"

namespace dircs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) fail(ErrorCode::ConfigError, "lambda grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) fail(ErrorCode::ConfigError, "lambda grid must be strictly ascending");
  }
}

}  // namespace

namespace {

// max(agree, n - agree): accuracy up to the global sign.
Eigen::Index sign_agreements(const SignalVector& beta, const NodeDataset& val) {
  if (val.n() == 0) fail(ErrorCode::InvalidArgument, "validation set is empty");
  if (beta.squaredNorm() < 1e-24) fail(ErrorCode::ZeroVector, "estimate is zero");
  if (beta.size() != val.p()) fail(ErrorCode::DimensionMismatch, "estimate does not match validation data");
  const Vector z = val.X.transpose() * beta;
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = z(i) >= 0.0 ? 1.0 : -1.0;
    if (s == val.y(i)) ++agree;
  }
  return std::max(agree, val.n() - agree);
}

}  // namespace

double validation_accuracy(const SignalVector& beta, const NodeDataset& val) {
  return static_cast<double>(sign_agreements(beta, val)) / static_cast<double>(val.n());
}

// Extended-precision sum so equal rational means round to the same double.
double mean_validation_accuracy(const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& val) {
  if (betas.size() != val.size() || betas.empty()) fail(ErrorCode::MismatchedNodes, "estimates and validation sets differ");
  long double sum = 0.0L;
  for (std::size_t j = 0; j < betas.size(); ++j) {
    sum += static_cast<long double>(sign_agreements(betas[j], val[j])) / static_cast<long double>(val[j].n());
  }
  return static_cast<double>(sum / static_cast<long double>(betas.size()));
}

SplitData split_all(const std::vector<NodeDataset>& datasets, double fraction, std::uint64_t seed) {
  SplitData out;
  out.train.reserve(datasets.size());
  out.val.reserve(datasets.size());
  for (std::size_t j = 0; j < datasets.size(); ++j) {
    auto [train, val] = split_validation(datasets[j], fraction, mix_seed(seed, 0x7A11D, j));
    out.train.push_back(std::move(train));
    out.val.push_back(std::move(val));
  }
  return out;
}

TuneReport warm_start_tune(const std::vector<double>& grid, const SplitData& data, const ProblemConfig& config,
                           RunOptions options) {
  check_grid(grid);
  const auto t0 = Clock::now();
  ProblemConfig cfg = config;
  cfg.lambda = grid.front();

  InMemoryTransport transport(make_workers(cfg, data.train, {}), options.threads);
  DirServer server(cfg, data.train, transport, options);
  server.start();

  TuneReport report;
  report.best_accuracy = mean_validation_accuracy(server.betas(), data.val);
  report.chosen_lambda = grid.front();
  std::vector<SignalVector> best = server.betas();
  std::size_t best_index = 0;

  double previous = report.best_accuracy;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    if (s > 0) {
      for (std::size_t j = 0; j < transport.num_nodes(); ++j) {
        static_cast<NodeWorker&>(transport.node(j)).set_lambda(grid[s]);
      }
      server.set_lambda(grid[s]);
    }
    TuneEntry entry;
    entry.lambda = grid[s];
    entry.val_accuracy = s == 0 ? report.best_accuracy : 0.0;
    int streak = 0;
    while (entry.rounds < cfg.rounds) {
      const bool converged = server.step();
      ++entry.rounds;
      const double acc = mean_validation_accuracy(server.betas(), data.val);
      entry.val_accuracy = std::max(entry.val_accuracy, acc);
      if (acc > report.best_accuracy) {
        report.best_accuracy = acc;
        report.chosen_lambda = grid[s];
        best_index = s;
        best = server.betas();
      }
      streak = std::abs(acc - previous) < 1e-4 ? streak + 1 : 0;
      previous = acc;
      if (streak >= 3 || converged) break;
    }
    report.path_rounds += entry.rounds;
    report.path.push_back(entry);
  }
  server.finish(StopReason::Converged);
  report.path[best_index].chosen = true;

  // Retrain at lambda* from the best snapshot, within the |grid| * T budget.
  const int budget = static_cast<int>(grid.size()) * cfg.rounds - report.path_rounds;
  report.estimates = best;
  report.final_accuracy = report.best_accuracy;
  if (budget > 0) {
    ProblemConfig retrain = cfg;
    retrain.lambda = report.chosen_lambda;
    retrain.rounds = std::min(cfg.rounds, budget);
    const RunTrace trace = run_dir(retrain, data.train, best, options);
    report.retrain_rounds = trace.rounds_executed;
    report.estimates = trace.estimates;
    report.final_accuracy = mean_validation_accuracy(trace.estimates, data.val);
    report.best_accuracy = std::max(report.best_accuracy, report.final_accuracy);
  }
  report.wall_ms = elapsed_ms(t0);
  return report;
}

TuneReport separate_tune(const std::vector<double>& grid, const SplitData& data, const ProblemConfig& config,
                         RunOptions options) {
  check_grid(grid);
  const auto t0 = Clock::now();
  TuneReport report;
  report.best_accuracy = -1.0;
  std::size_t best_index = 0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    ProblemConfig cfg = config;
    cfg.lambda = grid[s];
    const RunTrace trace = run_dir(cfg, data.train, {}, options);
    TuneEntry entry;
    entry.lambda = grid[s];
    entry.rounds = trace.rounds_executed;
    entry.val_accuracy = mean_validation_accuracy(trace.estimates, data.val);
    report.path_rounds += entry.rounds;
    if (entry.val_accuracy > report.best_accuracy) {
      report.best_accuracy = entry.val_accuracy;
      report.chosen_lambda = grid[s];
      report.estimates = trace.estimates;
      best_index = s;
    }
    report.path.push_back(entry);
  }
  report.path[best_index].chosen = true;
  report.final_accuracy = report.best_accuracy;
  report.wall_ms = elapsed_ms(t0);
  return report;
}

void write_tune_csv(const TuneReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "lambda,rounds,val_accuracy,is_chosen\n";
  for (const auto& e : report.path) {
    out << csv::fmt(e.lambda) << ',' << e.rounds << ',' << csv::fmt(e.val_accuracy) << ',' << (e.chosen ? 1 : 0)
        << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace dircs
