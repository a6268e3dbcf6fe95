#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

using Rng = std::mt19937_64;

// splitmix64-style mixing; used to derive independent streams from a master seed.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

struct Covariance {
  Matrix sigma;
  Matrix lower;  // sigma = lower * lower^T
};

/// AR(1) covariance: sigma(k, l) = rho^|k-l|.
Covariance gen_covariance(int p, double rho);

/// Bernoulli(0.5) pattern rescaled to unit elliptic norm beta^T Sigma beta = 1.
SignalVector gen_base_signal(const Covariance& cov, Rng& rng);

struct FamilyOptions {
  int max_attempts = 50;
  // When set, every j >= 2 uses this angle to the base signal instead of a
  // uniform draw (test hook for the planar rotation identity).
  std::optional<double> fixed_angle;
};

/// Signals whose pairwise |cos| is at least cos(theta_max).
///
/// All rotations happen in one random plane through the base direction, so
/// each signal's line makes an angle in (0, theta_max) with the base line on
/// the same side. The angle to the base signal itself is drawn uniformly
/// from (0, theta_max) U (pi - theta_max, pi). The family is rejection-checked
/// against the pairwise bound and redrawn up to max_attempts times.
std::vector<SignalVector> gen_signal_family(const SignalVector& base, int m, double theta_max,
                                            const Covariance& cov, Rng& rng,
                                            const FamilyOptions& opts = {});

/// y_i = xi_i * sign(x_i^T beta + eps_i), sign(0) = +1, P(xi_i = +1) = q.
NodeDataset gen_measurements(const SignalVector& beta, int n, const Covariance& cov, double sigma, double q,
                             Rng& rng);

struct AllocationSpec {
  AllocationKind kind = AllocationKind::Equal;
  double exponent = 0.8;  // power law
  double alpha = 0.5;     // dirichlet
};

/// Node sample sizes summing to N, each at least p + 5.
std::vector<int> allocate_sizes(int total, int m, int p, const AllocationSpec& spec, Rng& rng);

/// Deterministic seeded split. Returns (train, validation).
std::pair<NodeDataset, NodeDataset> split_validation(const NodeDataset& ds, double fraction, std::uint64_t seed);

struct Scenario {
  ProblemConfig config;
  Covariance cov;
  std::vector<NodeDataset> nodes;
};

/// Full synthetic scenario for one replication.
Scenario generate_scenario(const ProblemConfig& config, std::uint64_t replication = 0);

/// Same, with externally supplied true signals (one per node).
Scenario generate_scenario_from_signals(const ProblemConfig& config, const std::vector<SignalVector>& signals,
                                        std::uint64_t replication = 0);

// CSV layout: one `node_<id>.csv` per node with a `# p,n,sigma,q` header line,
// then rows `x_1,...,x_p,y`; plus `truth.csv` with rows
// `node_id,beta_1..beta_p,sigma,q`.
void export_scenario(const Scenario& scenario, const std::string& dir);
std::vector<NodeDataset> import_scenario(const std::string& dir);
NodeDataset import_node_file(const std::string& path);

/// Plain CSV of signal vectors, one per row (no header, or a header starting with '#').
std::vector<SignalVector> import_signals(const std::string& path);

}  // namespace dircs
