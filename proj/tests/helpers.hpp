#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"
#include "dircs/datagen.hpp"

namespace testing {

using namespace dircs;

inline Vector gaussian(Eigen::Index size, Rng& rng) {
  std::normal_distribution<double> z;
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = z(rng);
  return v;
}

/// Gaussian design with y = sign(x^T b + noise), truth attached.
inline NodeDataset random_dataset(int p, int n, Rng& rng, double sigma = 0.1) {
  const Vector b = gaussian(p, rng);
  Matrix X(p, n);
  for (int i = 0; i < n; ++i) X.col(i) = gaussian(p, rng);
  std::normal_distribution<double> eps(0.0, sigma);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = X.col(i).dot(b) + eps(rng) >= 0.0 ? 1.0 : -1.0;
  return build_stats(std::move(X), std::move(y), GroundTruth{b, sigma, 1.0});
}

inline std::vector<SignalVector> random_betas(int m, int p, Rng& rng) {
  std::vector<SignalVector> out;
  for (int j = 0; j < m; ++j) out.push_back(gaussian(p, rng));
  return out;
}

inline std::vector<LiftedState> lift_all(const std::vector<SignalVector>& betas) {
  std::vector<LiftedState> out;
  for (const auto& b : betas) out.push_back(lift(b));
  return out;
}

inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dircs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

/// Small equal-size scenario for solver-level tests.
inline ProblemConfig small_config(int m = 4, int p = 5, int n = 80) {
  ProblemConfig c;
  c.m = m;
  c.p = p;
  c.node_n = n;
  c.total_n = m * n;
  c.allocation = AllocationKind::Equal;
  return c;
}

}  // namespace testing
