#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dircs/config.hpp"
#include "dircs/metrics.hpp"
#include "dircs/solver.hpp"

namespace dircs {

struct MethodResult {
  std::string method;
  double lambda = 0.0;
  std::vector<SignalVector> estimates;
  std::optional<RunTrace> trace;  // dir and cir only
};

/// dir | sls | pls | cir. `drd` is a reserved id and raises ConfigError.
MethodResult run_method(const std::string& method, const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                        RunOptions options = {});

/// Needs ground truth on every node; `sls_cos` (per node) drives the improved flag.
std::vector<NodeEvaluation> evaluate(const MethodResult& result, const std::vector<NodeDataset>& datasets,
                                     const std::vector<double>& sls_cos);

struct EvalRow {
  std::string scenario_id;
  int rep = 0;
  double lambda = 0.0;
  NodeEvaluation eval;
};

/// `scenario_id,rep,node_id,method,lambda,l2_error,abs_cosine,improved`.
void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path);
std::vector<EvalRow> read_eval_csv(const std::string& path);

/// `node_id,beta_1..beta_p`.
void write_estimates_csv(const std::vector<SignalVector>& estimates, const std::string& path);

struct AggregateRow {
  std::string scenario_id;
  std::string method;
  int count = 0;
  double mean_l2 = 0, q1_l2 = 0, median_l2 = 0, q3_l2 = 0;
  double mean_cos = 0, q1_cos = 0, median_cos = 0, q3_cos = 0;
  double improved_ratio = 0;
};

/// Mean and quartiles per (scenario, method), in first-appearance order.
std::vector<AggregateRow> aggregate(const std::vector<EvalRow>& rows);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);

/// Linear-interpolation quantile (type 7).
double quantile(std::vector<double> values, double prob);

std::vector<NodeDataset> load_or_generate(const ExperimentConfig& cfg, std::ostream& log);

void cmd_gen(const ExperimentConfig& cfg, std::ostream& log);
void cmd_run(const ExperimentConfig& cfg, std::ostream& log);
void cmd_tune(const ExperimentConfig& cfg, std::ostream& log);
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
void cmd_serve(const ExperimentConfig& cfg, std::ostream& log);
void cmd_node(const ExperimentConfig& cfg, std::ostream& log);
/// Returns false when any hard check fails.
bool cmd_check(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace dircs
