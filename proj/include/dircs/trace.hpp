#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

enum class StopReason { MaxRounds, Converged };

const char* stop_reason_name(StopReason r) noexcept;

struct RoundRecord {
  int round = 0;
  double objective = 0.0;
  std::uint64_t comm_scalars = 0;
  double wall_ms = 0.0;
  std::vector<SignalVector> betas;  // only when snapshots are enabled
};

/// Per-round history of a DIR or CIR run. Entry 0 is the initial point.
struct RunTrace {
  std::vector<RoundRecord> records;
  std::vector<SignalVector> estimates;
  int rounds_executed = 0;
  StopReason stop = StopReason::MaxRounds;
  bool centralized = false;
  // Scalars the nodes send once before round 1 so the server can form psi^(0).
  std::uint64_t init_scalars = 0;
  int step_halvings = 0;
  double final_step = 0.0;
};

/// Writes `round,objective,comm_scalars,wall_ms`.
void write_trace_csv(const RunTrace& trace, const std::string& path);

/// Relative-change stopping rule with patience.
class StopRule {
 public:
  StopRule(int max_rounds, double rel_tol, int patience);

  /// Feed G after round t (t >= 1); true once the relative change has stayed
  /// below rel_tol for `patience` rounds. Never fires before round 2.
  bool update(int round, double previous, double current);
  int max_rounds() const { return max_rounds_; }

 private:
  int max_rounds_;
  double rel_tol_;
  int patience_;
  int streak_ = 0;
};

}  // namespace dircs
