#include "dircs/objective.hpp"

#include <cmath>
#include <string>

namespace dircs {

namespace {

constexpr double kTiny = 1e-12;

void require_nonzero(const Vector& v, const char* what) {
  if (v.squaredNorm() < kTiny * kTiny) fail(ErrorCode::ZeroVector, std::string(what) + " is zero");
}

void check_family(const std::vector<SignalVector>& betas) {
  for (std::size_t j = 0; j < betas.size(); ++j) {
    if (betas[j].squaredNorm() < kTiny * kTiny) {
      fail(ErrorCode::ZeroVector, "estimate of node " + std::to_string(j) + " is zero");
    }
  }
}

double lift_denominator(const Vector& v) {
  const double d = v.squaredNorm() - v(v.size() - 1) * v(v.size() - 1);
  if (d < kTiny) fail(ErrorCode::DegenerateLift, "lifted state has a vanishing signal part");
  return d;
}

}  // namespace

double local_loss(const SignalVector& beta, const NodeDataset& ds) {
  if (beta.size() != ds.p()) fail(ErrorCode::DimensionMismatch, "signal length does not match dataset");
  return beta.dot(ds.gram * beta) - 2.0 * ds.xy.dot(beta) + 1.0;
}

double cos2(const Vector& a, const Vector& b) {
  require_nonzero(a, "first argument");
  require_nonzero(b, "second argument");
  const double dot = a.dot(b);
  return std::min(1.0, dot * dot / (a.squaredNorm() * b.squaredNorm()));
}

double penalty_G(const std::vector<SignalVector>& betas, double lambda) {
  check_family(betas);
  const auto m = betas.size();
  std::vector<Vector> units;
  units.reserve(m);
  for (const auto& b : betas) units.push_back(b / b.norm());
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      const double c = units[j].dot(units[k]);
      sum += c * c;
    }
  }
  return -lambda / (2.0 * static_cast<double>(m)) * sum;
}

double objective_G(const std::vector<SignalVector>& betas, const std::vector<NodeDataset>& datasets, double lambda) {
  if (betas.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "estimates and datasets differ in count");
  double total = penalty_G(betas, lambda);
  for (std::size_t j = 0; j < betas.size(); ++j) total += local_loss(betas[j], datasets[j]);
  return total;
}

double lifted_pair_penalty_g(const LiftedState& vj, const LiftedState& vk) {
  if (vj.dim() != vk.dim()) fail(ErrorCode::DimensionMismatch, "lifted states differ in length");
  const double dj = lift_denominator(vj.vec());
  const double dk = lift_denominator(vk.vec());
  // tr(A_j A_j^T I1 A_k A_k^T I1) = (v_j^T I1 v_k)^2 for A = v e^T.
  const double cross = vj.beta().dot(vk.beta());
  return -(cross * cross) / (dj * dk);
}

double objective_H(const std::vector<LiftedState>& vs, const std::vector<NodeDataset>& datasets, double lambda) {
  if (vs.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "lifted states and datasets differ in count");
  const auto m = vs.size();
  double penalty = 0.0;
  double fit = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    fit += datasets[j].lifted_quadratic(vs[j].vec());
    for (std::size_t k = 0; k < m; ++k) penalty += lifted_pair_penalty_g(vs[j], vs[k]);
  }
  return fit + lambda / (2.0 * static_cast<double>(m)) * penalty;
}

SignalVector exact_penalty_grad(int j, const std::vector<SignalVector>& betas, double lambda) {
  check_family(betas);
  const int m = static_cast<int>(betas.size());
  if (j < 0 || j >= m) fail(ErrorCode::InvalidArgument, "node index out of range");
  const SignalVector& b = betas[static_cast<std::size_t>(j)];
  const double nn = b.squaredNorm();
  SignalVector acc = SignalVector::Zero(b.size());
  for (int k = 0; k < m; ++k) {
    if (k == j) continue;
    const Vector u = betas[static_cast<std::size_t>(k)] / betas[static_cast<std::size_t>(k)].norm();
    const double t = b.dot(u);
    acc += t * u / nn - t * t * b / (nn * nn);
  }
  // Each unordered pair shows up twice in the double sum.
  return -(2.0 * lambda / m) * acc;
}

double psi_surrogate_penalty(const SignalVector& beta, const Vector& psi_j) {
  const double nn = beta.squaredNorm();
  if (nn < kTiny) fail(ErrorCode::DegenerateLift, "signal part is zero");
  const double t = beta.dot(psi_j);
  return t * t / (2.0 * nn);
}

double local_surrogate(const SignalVector& beta, const Vector& psi_j, const NodeDataset& ds, double scale) {
  return 0.5 * local_loss(beta, ds) - scale * psi_surrogate_penalty(beta, psi_j);
}

Vector psi_local_gradient(const LiftedState& v, const Vector& psi_j, const NodeDataset& ds, double scale,
                          GradientVariant variant) {
  const Eigen::Index p = ds.p();
  if (v.dim() != p || psi_j.size() != p) fail(ErrorCode::DimensionMismatch, "gradient inputs differ in length");
  Vector d = ds.lifted_data_term(v.vec());
  if (scale == 0.0) return d;

  const auto beta = v.beta();
  if (variant == GradientVariant::Analytic) {
    const double nn = beta.squaredNorm();
    if (nn < kTiny) fail(ErrorCode::DegenerateLift, "signal part is zero");
    const double t = beta.dot(psi_j);
    d.head(p) -= scale * (t * psi_j / nn - t * t * beta / (nn * nn));
    return d;
  }

  const double last = v.last();
  const double tau = last * last;
  if (tau < kTiny) fail(ErrorCode::DegenerateLift, "tau vanishes");
  Vector w(p + 1);
  w.head(p) = psi_j;
  w(p) = 1.0;
  const double zeta = tau * w(p) * w(p);
  d -= scale * (w * w.dot(v.vec()) / tau - zeta * v.vec() / (tau * tau));
  return d;
}

Vector psi_local_gradient(const LiftedState& v, const Vector& psi_j, const NodeDataset& ds, double lambda, int m,
                          GradientVariant variant, PenaltyScaleMode mode) {
  return psi_local_gradient(v, psi_j, ds, penalty_scale_value(lambda, m, mode), variant);
}

std::vector<Vector> lifted_gradient_H(const std::vector<LiftedState>& vs, const std::vector<NodeDataset>& datasets,
                                      double lambda) {
  if (vs.size() != datasets.size()) fail(ErrorCode::MismatchedNodes, "lifted states and datasets differ in count");
  const auto m = vs.size();
  const double w = lambda / (2.0 * static_cast<double>(m));
  std::vector<double> den(m);
  for (std::size_t j = 0; j < m; ++j) den[j] = lift_denominator(vs[j].vec());

  std::vector<Vector> grads;
  grads.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vector& vj = vs[j].vec();
    const Eigen::Index p = vs[j].dim();
    Vector g = 2.0 * datasets[j].lifted_data_term(vj);
    if (lambda != 0.0) {
      const double dj = den[j];
      Vector pen = Vector::Zero(p + 1);
      for (std::size_t k = 0; k < m; ++k) {
        const double dk = den[k];
        if (k == j) {
          const double s = vs[j].beta().squaredNorm();
          pen.head(p) -= 4.0 * s * vs[j].beta() / (dj * dj);
          pen.head(p) += 4.0 * s * s * vs[j].beta() / (dj * dj * dj);
        } else {
          const double cross = vs[j].beta().dot(vs[k].beta());
          pen.head(p) -= 2.0 * 2.0 * cross * vs[k].beta() / (dj * dk);
          pen.head(p) += 2.0 * 2.0 * cross * cross * vs[j].beta() / (dj * dj * dk);
        }
      }
      g += w * pen;
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double invexity_probe(const std::vector<LiftedState>& a, const std::vector<LiftedState>& a_tilde,
                      const std::vector<NodeDataset>& datasets, double lambda, InvexityKernel kernel) {
  const auto m = a.size();
  if (a_tilde.size() != m || datasets.size() != m) fail(ErrorCode::MismatchedNodes, "probe families differ in size");
  const double diff = objective_H(a, datasets, lambda) - objective_H(a_tilde, datasets, lambda);
  const auto grads = lifted_gradient_H(a_tilde, datasets, lambda);

  double inner = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    Vector eta;
    if (kernel == InvexityKernel::Displacement) {
      eta = a[j].vec() - a_tilde[j].vec();
    } else {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        num += lifted_pair_penalty_g(a[j], a[k]);
        den += lifted_pair_penalty_g(a_tilde[j], a_tilde[k]);
      }
      if (std::abs(den) < kTiny) {
        fail(ErrorCode::DegenerateDenominator, "pair penalty sum vanishes at node " + std::to_string(j));
      }
      const double trace_minus_one = a[j].vec().squaredNorm() - 1.0;
      const double tau = -0.5 * trace_minus_one * num / den;
      eta = -(tau + 0.5) * a_tilde[j].vec();
    }
    inner += eta.dot(grads[j]);
  }
  return diff - inner;
}

}  // namespace dircs
