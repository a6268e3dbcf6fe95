#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

enum class SweepKind { None, Theta, N, M, Dirichlet, Noise, Flip };

/// Problem parameters plus everything the experiment driver needs.
struct ExperimentConfig {
  ProblemConfig problem;

  std::string method = "dir";  // dir | sls | pls | cir | drd (reserved)
  std::string data_dir;
  std::string out_dir = "out";
  int threads = 1;
  bool snapshots = false;

  SweepKind sweep = SweepKind::None;
  std::vector<double> sweep_values;
  int replications = 20;
  std::vector<std::string> methods{"dir", "sls", "pls", "cir"};

  bool compare_separate = true;  // tune: also time the one-run-per-lambda procedure

  std::string host = "127.0.0.1";
  int port = 5555;
  int timeout_ms = 30000;
  int node_id = 0;

  int check_instances = 100;
  int init_count = 5;

  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and bad
/// values raise ConfigError naming `origin` and the line number.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Applies one key/value pair (same syntax as a config line).
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Number or product/quotient of numbers and `pi`, e.g. `pi/8`, `2*pi/5`, `1e-6`.
double parse_real(const std::string& text);

std::vector<std::string> config_keys();

const char* sweep_name(SweepKind kind) noexcept;

/// Config for one sweep point; the value is interpreted per sweep kind.
ProblemConfig apply_sweep(const ProblemConfig& base, SweepKind kind, double value);

}  // namespace dircs
