#include "dircs/solver.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dircs/objective.hpp"

namespace dircs {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Vector unit(const SignalVector& b, std::size_t id) {
  const double n = b.norm();
  if (!(n > 1e-12)) fail(ErrorCode::ZeroVector, "estimate of node " + std::to_string(id) + " is zero");
  return b / n;
}

void check_finite(const Vector& v) {
  if (!v.allFinite() || v.norm() > 1e12) fail(ErrorCode::StepDiverged, "local iterate diverged");
}

}  // namespace

LocalParams local_params(const ProblemConfig& config, int node) {
  LocalParams lp;
  lp.lambda = config.lambda;
  lp.m = config.m;
  lp.step_size = config.step_size;
  lp.epochs = config.epochs_for(node);
  lp.variant = config.variant;
  lp.penalty_scale = config.penalty_scale;
  lp.sign_aligned = config.sign_aligned;
  lp.trace_matched = config.trace_matched;
  return lp;
}

Vector neighbor_direction(const SignalVector& beta, const Vector& psi, const LocalParams& params) {
  const Vector u = unit(beta, 0);
  double s = 1.0;
  if (params.sign_aligned && u.dot(psi) < 0.0) s = -1.0;
  Vector psi_j = psi - s * u;
  const double norm = psi_j.norm();
  if (params.trace_matched && params.m > 1 && norm > 1e-12) psi_j *= std::sqrt(params.m - 1.0) / norm;
  return psi_j;
}

SignalVector local_update(const NodeDataset& ds, const SignalVector& beta, const Vector& psi,
                          const LocalParams& params) {
  if (beta.size() != ds.p() || psi.size() != ds.p()) fail(ErrorCode::DimensionMismatch, "local update inputs differ");
  if (params.epochs == 0) return beta;
  const Vector psi_j = neighbor_direction(beta, psi, params);
  const double scale = penalty_scale_value(params.lambda, params.m, params.penalty_scale);

  LiftedState v = lift(beta);
  for (int k = 0; k < params.epochs; ++k) {
    const Vector d = psi_local_gradient(v, psi_j, ds, scale, params.variant);
    if (params.variant == GradientVariant::PaperLiteral) {
      v = project(LiftedState(v.vec() - params.step_size * d));
      check_finite(v.vec());
      continue;
    }
    const double f0 = local_surrogate(v.beta(), psi_j, ds, scale);
    double a = params.step_size;
    for (int h = 0; h <= 60; ++h, a *= 0.5) {
      LiftedState cand = project(LiftedState(v.vec() - a * d));
      check_finite(cand.vec());
      if (cand.beta().squaredNorm() < 1e-24) continue;
      if (local_surrogate(cand.beta(), psi_j, ds, scale) <= f0) {
        v = std::move(cand);
        break;
      }
    }
  }
  return extract(v);
}

Vector server_aggregate(const std::vector<SignalVector>& betas) {
  if (betas.empty()) fail(ErrorCode::InvalidArgument, "nothing to aggregate");
  Vector psi = Vector::Zero(betas.front().size());
  for (std::size_t k = 0; k < betas.size(); ++k) psi += unit(betas[k], k);
  return psi;
}

Vector aligned_aggregate(const std::vector<SignalVector>& betas, const Vector* previous) {
  if (betas.empty()) fail(ErrorCode::InvalidArgument, "nothing to aggregate");
  const std::size_t m = betas.size();
  std::vector<Vector> u;
  u.reserve(m);
  for (std::size_t k = 0; k < m; ++k) u.push_back(unit(betas[k], k));
  const Vector& ref = previous != nullptr && previous->norm() > 0.0 ? *previous : u.front();

  std::vector<double> s(m);
  for (std::size_t k = 0; k < m; ++k) s[k] = u[k].dot(ref) >= 0.0 ? 1.0 : -1.0;

  auto sum = [&] {
    Vector psi = Vector::Zero(u.front().size());
    for (std::size_t k = 0; k < m; ++k) psi += s[k] * u[k];
    return psi;
  };
  // Each flip raises ||psi||^2 by at least 4 - 4|u.psi| > 0, so this terminates.
  Vector psi = sum();
  for (std::size_t iter = 0; iter < 64 * m * m + 64; ++iter) {
    std::size_t bad = m;
    for (std::size_t k = 0; k < m; ++k) {
      const double want = u[k].dot(psi) >= 0.0 ? 1.0 : -1.0;
      if (want != s[k]) {
        bad = k;
        break;
      }
    }
    if (bad == m) break;
    s[bad] = -s[bad];
    psi = sum();
  }
  return psi;
}

// ---------------------------------------------------------------------------

NodeWorker::NodeWorker(std::uint32_t id, NodeDataset data, LocalParams params, SignalVector init)
    : id_(id), data_(std::move(data)), params_(params), beta_(std::move(init)) {
  if (beta_.size() != data_.p()) fail(ErrorCode::DimensionMismatch, "initial estimate has wrong length");
}

Message NodeWorker::registration() const {
  Message msg;
  msg.kind = MessageKind::Report;
  msg.round = 0;
  msg.node_id = id_;
  msg.payload.assign(beta_.data(), beta_.data() + beta_.size());
  return msg;
}

Message NodeWorker::handle(const Message& broadcast) {
  if (broadcast.kind != MessageKind::Broadcast) fail(ErrorCode::BadKind, "node expected a Broadcast");
  if (static_cast<Eigen::Index>(broadcast.payload.size()) != data_.p()) {
    fail(ErrorCode::DimensionMismatch, "broadcast payload has wrong length");
  }
  const Vector psi = Eigen::Map<const Vector>(broadcast.payload.data(), data_.p());
  beta_ = local_update(data_, beta_, psi, params_);
  Message msg;
  msg.kind = MessageKind::Report;
  msg.round = broadcast.round;
  msg.node_id = id_;
  msg.payload.assign(beta_.data(), beta_.data() + beta_.size());
  return msg;
}

std::vector<SignalVector> default_init(const std::vector<NodeDataset>& datasets) {
  std::vector<SignalVector> init;
  init.reserve(datasets.size());
  for (const auto& ds : datasets) init.push_back(ds.xy);
  return init;
}

std::vector<SignalVector> random_init(int m, int p, std::uint64_t seed, bool identical) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] {
    SignalVector b(p);
    for (int k = 0; k < p; ++k) b(k) = gauss(rng);
    return b;
  };
  std::vector<SignalVector> init;
  init.reserve(static_cast<std::size_t>(m));
  const SignalVector shared = draw();
  for (int j = 0; j < m; ++j) init.push_back(identical ? shared : draw());
  return init;
}

std::vector<std::unique_ptr<NodeEndpoint>> make_workers(const ProblemConfig& config,
                                                        const std::vector<NodeDataset>& datasets,
                                                        const std::vector<SignalVector>& init) {
  if (static_cast<int>(datasets.size()) != config.m) {
    fail(ErrorCode::MismatchedNodes, "config m=" + std::to_string(config.m) + " but " +
                                         std::to_string(datasets.size()) + " datasets");
  }
  const auto start = init.empty() ? default_init(datasets) : init;
  if (start.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "one initial estimate per node required");
  std::vector<std::unique_ptr<NodeEndpoint>> nodes;
  nodes.reserve(datasets.size());
  for (std::size_t j = 0; j < datasets.size(); ++j) {
    nodes.push_back(std::make_unique<NodeWorker>(static_cast<std::uint32_t>(j), datasets[j],
                                                 local_params(config, static_cast<int>(j)), start[j]));
  }
  return nodes;
}

// ---------------------------------------------------------------------------

DirServer::DirServer(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, Transport& transport,
                     RunOptions options)
    : config_(config),
      datasets_(datasets),
      transport_(transport),
      options_(options),
      stop_(config.rounds, config.rel_tol, config.patience) {
  config_.validate();
  if (transport.num_nodes() != datasets.size() || static_cast<int>(datasets.size()) != config.m) {
    fail(ErrorCode::MismatchedNodes, "transport, datasets and config disagree on m");
  }
}

namespace {

std::vector<SignalVector> reports_to_betas(const std::vector<Message>& reports) {
  std::vector<SignalVector> betas;
  betas.reserve(reports.size());
  for (const auto& r : reports) {
    betas.push_back(Eigen::Map<const Vector>(r.payload.data(), static_cast<Eigen::Index>(r.payload.size())));
  }
  return betas;
}

}  // namespace

void DirServer::record(std::uint64_t scalars) {
  RoundRecord rec;
  rec.round = round_;
  rec.objective = objective_;
  rec.comm_scalars = scalars;
  rec.wall_ms = elapsed_ms(t0_);
  if (options_.snapshots) rec.betas = betas_;
  trace_.records.push_back(std::move(rec));
}

void DirServer::start() {
  t0_ = Clock::now();
  auto reports = order_reports(transport_.collect_registration(), transport_.num_nodes(), 0);
  betas_ = reports_to_betas(reports);
  for (const auto& b : betas_) {
    if (b.size() != datasets_.front().p()) fail(ErrorCode::DimensionMismatch, "registration payload has wrong length");
  }
  psi_ = config_.sign_aligned ? aligned_aggregate(betas_, nullptr) : server_aggregate(betas_);
  objective_ = objective_G(betas_, datasets_, config_.lambda);
  trace_.init_scalars = transport_.registration_counters().scalars_sent;
  round_ = 0;
  record(0);
}

bool DirServer::step() {
  ++round_;
  RoundResult rr = run_round(transport_, static_cast<std::uint64_t>(round_), psi_);
  betas_ = reports_to_betas(rr.reports);
  psi_ = config_.sign_aligned ? aligned_aggregate(betas_, &psi_) : server_aggregate(betas_);
  const double previous = objective_;
  objective_ = objective_G(betas_, datasets_, config_.lambda);
  record(rr.counters.scalars_sent);
  return stop_.update(round_, previous, objective_);
}

void DirServer::set_lambda(double lambda) {
  config_.lambda = lambda;
  objective_ = objective_G(betas_, datasets_, lambda);
  stop_ = StopRule(config_.rounds, config_.rel_tol, config_.patience);
}

RunTrace DirServer::finish(StopReason reason) {
  transport_.close();
  trace_.estimates = betas_;
  trace_.rounds_executed = round_;
  trace_.stop = reason;
  trace_.final_step = config_.step_size;
  return trace_;
}

RunTrace run_dir_over(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, Transport& transport,
                      RunOptions options) {
  DirServer server(config, datasets, transport, options);
  server.start();
  while (server.round() < config.rounds) {
    if (server.step()) return server.finish(StopReason::Converged);
  }
  return server.finish(StopReason::MaxRounds);
}

RunTrace run_dir(const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                 const std::vector<SignalVector>& init, RunOptions options) {
  InMemoryTransport transport(make_workers(config, datasets, init), options.threads);
  return run_dir_over(config, datasets, transport, options);
}

// ---------------------------------------------------------------------------

RunTrace run_cir(const ProblemConfig& config, const std::vector<NodeDataset>& datasets,
                 const std::vector<SignalVector>& init, RunOptions options) {
  config.validate();
  if (static_cast<int>(datasets.size()) != config.m) fail(ErrorCode::MismatchedNodes, "datasets do not match m");
  std::vector<SignalVector> betas = init.empty() ? default_init(datasets) : init;
  if (betas.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "one initial estimate per node required");

  const auto t0 = Clock::now();
  RunTrace trace;
  trace.centralized = true;
  double alpha = config.step_size;
  double g = objective_G(betas, datasets, config.lambda);
  auto record = [&](int round) {
    RoundRecord rec;
    rec.round = round;
    rec.objective = g;
    rec.wall_ms = elapsed_ms(t0);
    if (options.snapshots) rec.betas = betas;
    trace.records.push_back(std::move(rec));
  };
  record(0);

  StopRule stop(config.rounds, config.rel_tol, config.patience);
  const std::size_t m = betas.size();
  StopReason reason = StopReason::MaxRounds;
  int round = 1;
  for (; round <= config.rounds; ++round) {
    std::vector<Vector> grads(m);
    for (std::size_t j = 0; j < m; ++j) {
      grads[j] = 2.0 * (datasets[j].gram * betas[j] - datasets[j].xy);
      if (config.lambda != 0.0) grads[j] += exact_penalty_grad(static_cast<int>(j), betas, config.lambda);
    }
    std::vector<SignalVector> next(m);
    double g_next = g;
    bool accepted = false;
    for (int h = 0; h <= 10; ++h) {
      for (std::size_t j = 0; j < m; ++j) {
        next[j] = betas[j] - alpha * grads[j];
        check_finite(next[j]);
      }
      try {
        g_next = objective_G(next, datasets, config.lambda);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVector) throw;
        g_next = std::numeric_limits<double>::infinity();
      }
      if (g_next <= g + 1e-8) {
        accepted = true;
        break;
      }
      if (h == 10) break;
      alpha *= 0.5;
      ++trace.step_halvings;
    }
    const double previous = g;
    if (accepted) {
      betas = std::move(next);
      g = g_next;
    }
    record(round);
    if (stop.update(round, previous, g)) {
      reason = StopReason::Converged;
      break;
    }
  }
  trace.estimates = betas;
  trace.rounds_executed = std::min(round, config.rounds);
  trace.stop = reason;
  trace.final_step = alpha;
  return trace;
}

}  // namespace dircs
