#include "dircs/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv_util.hpp"

namespace dircs {

const char* stop_reason_name(StopReason r) noexcept {
  return r == StopReason::Converged ? "converged" : "max_rounds";
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "round,objective,comm_scalars,wall_ms\n";
  for (const auto& r : trace.records) {
    out << r.round << ',' << csv::fmt(r.objective) << ',' << r.comm_scalars << ',' << csv::fmt(r.wall_ms) << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

StopRule::StopRule(int max_rounds, double rel_tol, int patience)
    : max_rounds_(max_rounds), rel_tol_(rel_tol), patience_(patience) {
  if (max_rounds < 1) fail(ErrorCode::ConfigError, "max rounds must be at least 1");
  if (patience < 1) fail(ErrorCode::ConfigError, "patience must be at least 1");
}

bool StopRule::update(int round, double previous, double current) {
  const double rel = std::abs(current - previous) / std::max(std::abs(previous), 1e-12);
  streak_ = rel < rel_tol_ ? streak_ + 1 : 0;
  return round >= 2 && streak_ >= patience_;
}

}  // namespace dircs
