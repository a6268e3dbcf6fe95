#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

enum class CheckStatus { Pass, Fail, ReportOnly };

const char* check_status_name(CheckStatus s) noexcept;

struct CheckReport {
  std::string name;
  int instances = 0;
  double max_deviation = 0.0;
  CheckStatus status = CheckStatus::Pass;
  std::uint64_t seed = 0;
  std::string detail;
};

/// |G - H(lift)| over random feasible families (p = 8, m = 5), plus lambda = 0 and m = 1 subsets.
CheckReport check_correspondence(std::uint64_t seed, int instances);

/// Central differences (h = 1e-5) against exact_penalty_grad (p = 6, m = 4)
/// and the analytic local gradient (p = 6); relative error <= 1e-6.
CheckReport check_gradients(std::uint64_t seed, int instances);

/// DIR from `n_inits` random initializations (one shared draw per
/// initialization, identical across nodes), each run to tight convergence;
/// passes when every node's abs_cosine spread is <= 0.01.
CheckReport check_init_robustness(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, int n_inits,
                                  std::uint64_t seed);

/// The small-node toy (m = 5, p = 2, n = 10) drawn from `config`'s seed and channels.
ProblemConfig toy_config(const ProblemConfig& base);

/// Report-only distribution of invexity_probe over random pairs (p = 5, m = 3).
CheckReport check_invexity(std::uint64_t seed, int instances);

/// In-memory vs loopback-socket DIR on a small scenario: bit-identical
/// estimates and exactly 2 m p scalars per round.
CheckReport check_transport_equivalence(std::uint64_t seed);

std::vector<CheckReport> run_check_suite(const ProblemConfig& config, int instances, int n_inits);

/// Writes `check,instances,max_deviation,status,seed,detail`.
void write_check_csv(const std::vector<CheckReport>& reports, const std::string& path);

}  // namespace dircs
