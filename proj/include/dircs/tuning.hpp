#pragma once

#include <string>
#include <vector>

#include "dircs/core_model.hpp"
#include "dircs/solver.hpp"

namespace dircs {

/// Fraction a of sign(x_i^T beta) == y_i, returned as max(a, 1 - a).
double validation_accuracy(const SignalVector& beta, const NodeDataset& val);

/// Node average of validation_accuracy.
double mean_validation_accuracy(const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& val);

struct SplitData {
  std::vector<NodeDataset> train;
  std::vector<NodeDataset> val;
};

/// Per-node seeded split; node j uses mix_seed(seed, j).
SplitData split_all(const std::vector<NodeDataset>& datasets, double fraction, std::uint64_t seed);

struct TuneEntry {
  double lambda = 0.0;
  int rounds = 0;
  double val_accuracy = 0.0;  // best over the rounds spent at this lambda
  bool chosen = false;
};

struct TuneReport {
  std::vector<TuneEntry> path;
  double chosen_lambda = 0.0;
  double best_accuracy = 0.0;  // max over every visited (lambda, round) snapshot
  double final_accuracy = 0.0;  // after retraining
  int path_rounds = 0;
  int retrain_rounds = 0;
  double wall_ms = 0.0;
  std::vector<SignalVector> estimates;
};

/// Warm-start path over an ascending grid. Advances when the mean validation
/// accuracy changes by less than 1e-4 for 3 consecutive rounds (or after T
/// rounds, or when the stop rule fires), then retrains at the best lambda from
/// the best snapshot. Total rounds never exceed |grid| * T.
TuneReport warm_start_tune(const std::vector<double>& grid, const SplitData& data, const ProblemConfig& config,
                           RunOptions options = {});

/// Reference procedure: every lambda run to convergence from the default init.
TuneReport separate_tune(const std::vector<double>& grid, const SplitData& data, const ProblemConfig& config,
                         RunOptions options = {});

/// Writes `lambda,rounds,val_accuracy,is_chosen`.
void write_tune_csv(const TuneReport& report, const std::string& path);

}  // namespace dircs
