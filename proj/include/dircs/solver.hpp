#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dircs/core_model.hpp"
#include "dircs/harness.hpp"
#include "dircs/trace.hpp"

namespace dircs {

/// Everything a node needs to run its local epochs.
struct LocalParams {
  double lambda = 1.0;
  int m = 1;
  double step_size = 0.05;
  int epochs = 5;
  GradientVariant variant = GradientVariant::Analytic;
  PenaltyScaleMode penalty_scale = PenaltyScaleMode::LambdaOverM;
  bool sign_aligned = true;
  bool trace_matched = true;
};

LocalParams local_params(const ProblemConfig& config, int node);

/// psi_j = psi - s_j u_j, where u_j = beta/||beta|| and s_j is +1 unless
/// sign alignment is on and u_j points away from psi. With trace matching the
/// result is rescaled to norm sqrt(m - 1).
Vector neighbor_direction(const SignalVector& beta, const Vector& psi, const LocalParams& params);

/// K projected steps on the lifted state with psi fixed. For the analytic
/// variant each step backtracks (up to 60 halvings) until L/2 - sP does not
/// increase; a step that never decreases it is skipped.
SignalVector local_update(const NodeDataset& ds, const SignalVector& beta, const Vector& psi,
                          const LocalParams& params);

/// Plain aggregate: sum of unit vectors in ascending node order.
Vector server_aggregate(const std::vector<SignalVector>& betas);

/// Sign-aligned aggregate: psi = sum_k s_k u_k with s_k = sign(u_k . psi) at
/// the fixed point. Starting signs come from `previous` (or u_0 if absent).
Vector aligned_aggregate(const std::vector<SignalVector>& betas, const Vector* previous);

class NodeWorker : public NodeEndpoint {
 public:
  NodeWorker(std::uint32_t id, NodeDataset data, LocalParams params, SignalVector init);

  std::uint32_t node_id() const override { return id_; }
  Message registration() const override;
  Message handle(const Message& broadcast) override;

  void set_lambda(double lambda) { params_.lambda = lambda; }
  const SignalVector& beta() const { return beta_; }
  const NodeDataset& data() const { return data_; }

 private:
  std::uint32_t id_;
  NodeDataset data_;
  LocalParams params_;
  SignalVector beta_;
};

struct RunOptions {
  int threads = 1;
  bool snapshots = false;
};

/// beta_j = X y / n for every node.
std::vector<SignalVector> default_init(const std::vector<NodeDataset>& datasets);

/// N(0, I) draws; with `identical` every node shares one draw.
std::vector<SignalVector> random_init(int m, int p, std::uint64_t seed, bool identical);

std::vector<std::unique_ptr<NodeEndpoint>> make_workers(const ProblemConfig& config,
                                                        const std::vector<NodeDataset>& datasets,
                                                        const std::vector<SignalVector>& init);

/// Server-side orchestration of the DIR rounds over any transport. The
/// datasets are only used to evaluate G for the trace and the stop rule.
class DirServer {
 public:
  DirServer(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, Transport& transport,
            RunOptions options = {});

  /// Registration (round 0).
  void start();
  /// One round; returns true when the stop rule fires.
  bool step();
  /// Changes lambda for the objective and resets the stop rule (nodes are updated by the caller).
  void set_lambda(double lambda);

  int round() const { return round_; }
  double objective() const { return objective_; }
  const std::vector<SignalVector>& betas() const { return betas_; }
  const RunTrace& trace() const { return trace_; }
  RunTrace finish(StopReason reason);

 private:
  void record(std::uint64_t scalars);

  ProblemConfig config_;
  const std::vector<NodeDataset>& datasets_;
  Transport& transport_;
  RunOptions options_;
  StopRule stop_;
  std::vector<SignalVector> betas_;
  Vector psi_;
  double objective_ = 0.0;
  int round_ = 0;
  RunTrace trace_;
  std::chrono::steady_clock::time_point t0_;
};

/// Full DIR run; an empty `init` means default_init.
RunTrace run_dir(const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                 const std::vector<SignalVector>& init = {}, RunOptions options = {});

/// Runs the DIR loop to completion on an existing transport.
RunTrace run_dir_over(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, Transport& transport,
                      RunOptions options = {});

/// Centralized gradient descent on G with exact penalty gradients. Step halves
/// (up to 10 times per round) when G rises by more than 1e-8; the reduced step is kept.
RunTrace run_cir(const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                 const std::vector<SignalVector>& init = {}, RunOptions options = {});

}  // namespace dircs
