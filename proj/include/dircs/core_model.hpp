#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dircs/error.hpp"

namespace dircs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A signal or its estimate; length p.
using SignalVector = Eigen::VectorXd;

/// Lifted representation of the rank-1 feasible matrix A = v e_{p+1}^T.
///
/// Only the (p+1)-vector v is stored. On the feasible set v = [beta; 1].
class LiftedState {
 public:
  LiftedState() = default;
  explicit LiftedState(Vector v) : v_(std::move(v)) {}

  Eigen::Index dim() const { return v_.size() - 1; }
  const Vector& vec() const { return v_; }
  Vector& vec() { return v_; }

  auto beta() const { return v_.head(dim()); }
  double last() const { return v_(dim()); }

 private:
  Vector v_;
};

struct GroundTruth {
  SignalVector beta;
  double sigma = 0.0;
  double q = 1.0;
};

/// One node's 1-bit measurements plus cached sufficient statistics.
///
/// X is p x n (columns are measurement vectors), y holds +-1 entries.
/// gram = X X^T / n and xy = X y / n are computed once at construction.
struct NodeDataset {
  Matrix X;
  Vector y;
  Matrix gram;
  Vector xy;
  std::optional<GroundTruth> truth;

  Eigen::Index p() const { return X.rows(); }
  Eigen::Index n() const { return X.cols(); }

  // Sigma_i S_{i,j} v / n expressed through the sufficient statistics.
  Vector lifted_data_term(const Vector& v) const;

  // v^T M v with M = [[G, -c], [-c^T, 1]]; equals f_j(A) for A = v e^T.
  double lifted_quadratic(const Vector& v) const;
};

NodeDataset build_stats(Matrix X, Vector y, std::optional<GroundTruth> truth = std::nullopt);

LiftedState lift(const SignalVector& beta);
SignalVector extract(const LiftedState& v);
LiftedState project(LiftedState v);

enum class GradientVariant { PaperLiteral, Analytic };
enum class PenaltyScaleMode { LambdaOverM, LambdaOverTwoM };
enum class AllocationKind { Equal, PowerLaw, Dirichlet };

struct ChannelSpec {
  double sigma = 0.1;
  double q = 0.75;
};

/// Algorithm and scenario parameters shared by the generator, the solvers and
/// the experiment driver.
struct ProblemConfig {
  int p = 20;
  int m = 30;
  int total_n = 2400;
  int node_n = 0;  // > 0 overrides the allocation with equal per-node sizes
  AllocationKind allocation = AllocationKind::PowerLaw;
  double power_law_exponent = 0.8;
  double dirichlet_alpha = 0.5;
  double theta_max = 0.39269908169872414;  // pi/8
  double covariance_decay = 0.3;
  std::vector<ChannelSpec> channels{{0.1, 0.75}, {0.2, 0.125}};
  std::vector<double> channel_probs{0.5, 0.5};

  double lambda = 1.0;
  std::vector<double> lambda_grid{0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
  double step_size = 0.05;
  int rounds = 300;
  int local_epochs = 5;
  std::vector<int> node_epochs;  // per-node override of local_epochs
  GradientVariant variant = GradientVariant::Analytic;
  PenaltyScaleMode penalty_scale = PenaltyScaleMode::LambdaOverM;
  bool sign_aligned = true;
  bool trace_matched = true;
  double rel_tol = 1e-6;
  int patience = 5;
  double validation_fraction = 0.2;
  bool identical_init = false;
  std::uint64_t seed = 1;

  void validate() const;
  int epochs_for(int node) const;
};

double penalty_scale_value(double lambda, int m, PenaltyScaleMode mode);

}  // namespace dircs
