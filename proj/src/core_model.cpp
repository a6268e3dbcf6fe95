#include "dircs/core_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dircs {

Vector NodeDataset::lifted_data_term(const Vector& v) const {
  const Eigen::Index dim = p();
  if (v.size() != dim + 1) fail(ErrorCode::DimensionMismatch, "lifted state has wrong length");
  const auto beta = v.head(dim);
  const double last = v(dim);
  Vector out(dim + 1);
  out.head(dim) = gram * beta - xy * last;
  out(dim) = -xy.dot(beta) + last;
  return out;
}

double NodeDataset::lifted_quadratic(const Vector& v) const {
  const Eigen::Index dim = p();
  if (v.size() != dim + 1) fail(ErrorCode::DimensionMismatch, "lifted state has wrong length");
  const auto beta = v.head(dim);
  const double last = v(dim);
  return beta.dot(gram * beta) - 2.0 * last * xy.dot(beta) + last * last;
}

NodeDataset build_stats(Matrix X, Vector y, std::optional<GroundTruth> truth) {
  if (X.rows() < 1 || X.cols() < 1) fail(ErrorCode::DimensionMismatch, "empty measurement matrix");
  if (y.size() != X.cols()) {
    fail(ErrorCode::DimensionMismatch, "y has " + std::to_string(y.size()) + " entries but X has " +
                                           std::to_string(X.cols()) + " columns");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 1.0 && y(i) != -1.0) {
      fail(ErrorCode::NonBinaryMeasurement, "measurement " + std::to_string(i) + " is not +-1");
    }
  }
  if (truth && truth->beta.size() != X.rows()) {
    fail(ErrorCode::DimensionMismatch, "ground-truth signal has wrong length");
  }
  NodeDataset ds;
  const double n = static_cast<double>(X.cols());
  ds.gram = (X * X.transpose()) / n;
  ds.gram = 0.5 * (ds.gram + ds.gram.transpose()).eval();
  ds.xy = (X * y) / n;
  ds.X = std::move(X);
  ds.y = std::move(y);
  ds.truth = std::move(truth);
  return ds;
}

LiftedState lift(const SignalVector& beta) {
  Vector v(beta.size() + 1);
  v.head(beta.size()) = beta;
  v(beta.size()) = 1.0;
  return LiftedState(std::move(v));
}

SignalVector extract(const LiftedState& v) {
  const double last = v.last();
  if (std::abs(last) < 1e-12) fail(ErrorCode::LastCoordinateZero, "lifted state has zero last coordinate");
  if (last == 1.0) return v.beta();
  return v.beta() / last;
}

LiftedState project(LiftedState v) {
  v.vec()(v.dim()) = 1.0;
  return v;
}

void ProblemConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::ConfigError, what); };
  if (p < 1) bad("p must be positive");
  if (m < 1) bad("m must be positive");
  if (total_n < 1 && node_n < 1) bad("either total_n or node_n must be positive");
  if (!(theta_max > 0.0 && theta_max < std::numbers::pi / 2)) bad("theta_max must lie in (0, pi/2)");
  if (!(covariance_decay >= 0.0 && covariance_decay < 1.0)) bad("covariance_decay must lie in [0, 1)");
  if (channels.empty()) bad("at least one (sigma, q) channel is required");
  if (channel_probs.size() != channels.size()) bad("channel_probs must match channels");
  for (const auto& c : channels) {
    if (c.sigma < 0.0) bad("channel sigma must be non-negative");
    if (!(c.q >= 0.0 && c.q <= 1.0) || c.q == 0.5) bad("channel q must lie in [0,1] and differ from 0.5");
  }
  double prob_sum = 0.0;
  for (double w : channel_probs) {
    if (w < 0.0) bad("channel_probs must be non-negative");
    prob_sum += w;
  }
  if (prob_sum <= 0.0) bad("channel_probs must not all be zero");
  if (lambda < 0.0) bad("lambda must be non-negative");
  if (lambda_grid.empty()) bad("lambda_grid must not be empty");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) bad("lambda_grid must be strictly ascending");
  }
  if (!(step_size > 0.0)) bad("step_size must be positive");
  if (rounds < 1) bad("rounds must be at least 1");
  if (local_epochs < 0) bad("local_epochs must be non-negative");
  if (!node_epochs.empty() && static_cast<int>(node_epochs.size()) != m) bad("node_epochs must list m values");
  for (int k : node_epochs) {
    if (k < 0) bad("node_epochs must be non-negative");
  }
  if (!(rel_tol >= 0.0)) bad("rel_tol must be non-negative");
  if (patience < 1) bad("patience must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) bad("validation_fraction must lie in (0, 0.5)");
  if (power_law_exponent < 0.0) bad("power_law_exponent must be non-negative");
  if (!(dirichlet_alpha > 0.0)) bad("dirichlet_alpha must be positive");
}

int ProblemConfig::epochs_for(int node) const {
  if (!node_epochs.empty()) return node_epochs.at(static_cast<std::size_t>(node));
  return local_epochs;
}

double penalty_scale_value(double lambda, int m, PenaltyScaleMode mode) {
  const double denom = mode == PenaltyScaleMode::LambdaOverM ? m : 2.0 * m;
  return lambda / denom;
}

}  // namespace dircs
