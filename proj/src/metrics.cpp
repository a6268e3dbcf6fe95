#include "dircs/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dircs/baselines.hpp"

namespace dircs {

namespace {

void require_nonzero(const Vector& v, const char* what) {
  if (v.squaredNorm() < 1e-24) fail(ErrorCode::ZeroVector, std::string(what) + " is zero");
}

}  // namespace

double l2_error(const SignalVector& estimate, const SignalVector& truth, double q) {
  require_nonzero(estimate, "estimate");
  require_nonzero(truth, "truth");
  if (estimate.size() != truth.size()) fail(ErrorCode::DimensionMismatch, "estimate and truth differ in length");
  const double s = q > 0.5 ? 1.0 : -1.0;
  return (estimate / estimate.norm() - s * truth / truth.norm()).norm();
}

double abs_cosine(const SignalVector& estimate, const SignalVector& truth) {
  require_nonzero(estimate, "estimate");
  require_nonzero(truth, "truth");
  if (estimate.size() != truth.size()) fail(ErrorCode::DimensionMismatch, "estimate and truth differ in length");
  return std::min(1.0, std::abs(estimate.dot(truth)) / (estimate.norm() * truth.norm()));
}

double improved_ratio(const std::vector<NodeEvaluation>& method, const std::vector<NodeEvaluation>& sls) {
  if (method.size() != sls.size() || method.empty()) fail(ErrorCode::MismatchedNodes, "node sets differ");
  std::size_t better = 0;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (method[i].node_id != sls[i].node_id) fail(ErrorCode::MismatchedNodes, "node ids differ");
    if (method[i].abs_cosine > sls[i].abs_cosine) ++better;
  }
  return static_cast<double>(better) / static_cast<double>(method.size());
}

Vector corrected_ls_delta(int j, const std::vector<SignalVector>& betas, double lambda) {
  const int m = static_cast<int>(betas.size());
  if (j < 0 || j >= m) fail(ErrorCode::InvalidArgument, "node index out of range");
  for (const auto& b : betas) require_nonzero(b, "estimate");
  const Vector& bj = betas[static_cast<std::size_t>(j)];
  const double nn = bj.squaredNorm();
  const Vector uj = bj / bj.norm();
  Vector delta = Vector::Zero(bj.size());
  for (int k = 0; k < m; ++k) {
    if (k == j) continue;
    const Vector uk = betas[static_cast<std::size_t>(k)] / betas[static_cast<std::size_t>(k)].norm();
    Vector t = uk * uk.dot(bj);
    t -= uj * uj.dot(t);
    delta += (lambda / m) * t / nn;
  }
  return delta;
}

double corrected_ls_residual(int j, const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& datasets,
                             double lambda) {
  if (betas.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "estimates and datasets differ in count");
  const Vector delta = corrected_ls_delta(j, betas, lambda);
  const NodeDataset& ds = datasets[static_cast<std::size_t>(j)];
  const Vector target = solve_gram(ds.gram, ds.xy + delta / static_cast<double>(ds.n()));
  return (betas[static_cast<std::size_t>(j)] - target).norm();
}

std::uint64_t comm_cost(const RunTrace& trace) {
  if (trace.centralized) return 0;
  std::uint64_t total = 0;
  for (const auto& r : trace.records) {
    if (r.round >= 1) total += r.comm_scalars;
  }
  return total;
}

}  // namespace dircs
