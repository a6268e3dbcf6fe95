#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"
#include "dircs/trace.hpp"

namespace dircs {

/// || bh/||bh|| - s b*/||b*|| || with s = +1 if q > 0.5 else -1.
double l2_error(const SignalVector& estimate, const SignalVector& truth, double q);

double abs_cosine(const SignalVector& estimate, const SignalVector& truth);

struct NodeEvaluation {
  int node_id = 0;
  std::string method;
  double l2_error = 0.0;
  double abs_cosine = 0.0;
  bool improved = false;
};

/// Fraction of nodes whose abs_cosine strictly exceeds the SLS value.
double improved_ratio(const std::vector<NodeEvaluation>& method, const std::vector<NodeEvaluation>& sls);

/// delta_j = sum_{k != j} (lambda/m) [I - P(b_j)] P(b_k) b_j / ||b_j||^2.
Vector corrected_ls_delta(int j, const std::vector<SignalVector>& betas, double lambda);

/// || b_j - (X X^T)^{-1} (X y + delta_j) ||.
double corrected_ls_residual(int j, const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& datasets,
                             double lambda);

/// Scalars transmitted over the run (registration excluded); 0 for centralized traces.
std::uint64_t comm_cost(const RunTrace& trace);

}  // namespace dircs
