#pragma once

#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

/// L_j(beta) = ||y - X^T beta||^2 / n, via the cached statistics.
double local_loss(const SignalVector& beta, const NodeDataset& ds);

/// Squared cosine similarity.
double cos2(const Vector& a, const Vector& b);

/// Penalty part of G_lambda: -(lambda/2m) sum_j sum_k cos^2(beta_j, beta_k), self terms included.
double penalty_G(const std::vector<SignalVector>& betas, double lambda);

double objective_G(const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& datasets, double lambda);

/// g(A_j, A_k) for A = v e^T, with denominators tr(A A^T) - 1 = ||v||^2 - 1.
double lifted_pair_penalty_g(const LiftedState& vj, const LiftedState& vk);

double objective_H(const std::vector<LiftedState>& vs, const std::vector<NodeDataset>& datasets, double lambda);

/// Gradient of penalty_G with respect to beta_j.
SignalVector exact_penalty_grad(int j, const std::vector<SignalVector>& betas, double lambda);

/// P_j(beta) = (beta^T psi_j)^2 / (2 ||beta||^2).
double psi_surrogate_penalty(const SignalVector& beta, const Vector& psi_j);

/// Scalar whose beta-gradient the analytic variant computes: L_j / 2 - s P_j.
double local_surrogate(const SignalVector& beta, const Vector& psi_j, const NodeDataset& ds, double scale);

/// Local descent direction in the lifted coordinates (length p + 1).
Vector psi_local_gradient(const LiftedState& v, const Vector& psi_j, const NodeDataset& ds, double scale,
                          GradientVariant variant);

Vector psi_local_gradient(const LiftedState& v, const Vector& psi_j, const NodeDataset& ds, double lambda, int m,
                          GradientVariant variant, PenaltyScaleMode mode = PenaltyScaleMode::LambdaOverM);

/// Gradient of objective_H with respect to every lifted vector, treating H as
/// a function of the matrices A_j = v_j e^T (so d = ||v||^2 - 1 in the denominators).
std::vector<Vector> lifted_gradient_H(const std::vector<LiftedState>& vs, const std::vector<NodeDataset>& datasets,
                                      double lambda);

enum class InvexityKernel {
  ScaledReverse,  // eta_j = -tau_j(A, At) At_j - At_j / 2
  Displacement,   // eta_j = A_j - At_j (the convex kernel)
};

/// H(A) - H(At) - sum_j <eta_j(A, At), grad_{A_j} H(At)>.
double invexity_probe(const std::vector<LiftedState>& a, const std::vector<LiftedState>& a_tilde,
                      const std::vector<NodeDataset>& datasets, double lambda,
                      InvexityKernel kernel = InvexityKernel::ScaledReverse);

}  // namespace dircs
