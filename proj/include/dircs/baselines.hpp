#pragma once

#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

/// Per-node least squares: solves G beta = c.
SignalVector sls(const NodeDataset& ds);

/// Pooled least squares: solves (sum_j n_j G_j) beta = sum_j n_j c_j.
SignalVector pls(const std::vector<NodeDataset>& datasets);

/// Symmetric positive definite solve; SingularGram when cond(gram) >= 1e12.
SignalVector solve_gram(const Matrix& gram, const Vector& rhs);

}  // namespace dircs
