#include "dircs/baselines.hpp"

#include <Eigen/Eigenvalues>

namespace dircs {

SignalVector solve_gram(const Matrix& gram, const Vector& rhs) {
  if (gram.rows() != gram.cols() || gram.rows() != rhs.size()) {
    fail(ErrorCode::DimensionMismatch, "gram and right-hand side do not match");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e12) fail(ErrorCode::SingularGram, "gram matrix is singular or ill-conditioned");
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorCode::SingularGram, "cholesky factorization failed");
  return llt.solve(rhs);
}

SignalVector sls(const NodeDataset& ds) { return solve_gram(ds.gram, ds.xy); }

SignalVector pls(const std::vector<NodeDataset>& datasets) {
  if (datasets.empty()) fail(ErrorCode::InvalidArgument, "no datasets to pool");
  const Eigen::Index p = datasets.front().p();
  Matrix gram = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  for (const auto& ds : datasets) {
    if (ds.p() != p) fail(ErrorCode::DimensionMismatch, "datasets differ in dimension");
    const double n = static_cast<double>(ds.n());
    gram += n * ds.gram;
    rhs += n * ds.xy;
  }
  return solve_gram(gram, rhs);
}

}  // namespace dircs
