// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dircs/baselines.hpp"
#include "dircs/datagen.hpp"
#include "dircs/diagnostics.hpp"
#include "dircs/experiment.hpp"
#include "dircs/harness.hpp"
#include "dircs/metrics.hpp"
#include "dircs/objective.hpp"
#include "dircs/solver.hpp"
#include "dircs/tuning.hpp"

using namespace dircs;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  %s\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename... T>
std::string fmtn(const char* f, T... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void guarded(int id, const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

NodeDataset concat(const std::vector<NodeDataset>& parts) {
  Eigen::Index n = 0;
  for (const auto& d : parts) n += d.n();
  Matrix X(parts.front().p(), n);
  Vector y(n);
  Eigen::Index at = 0;
  for (const auto& d : parts) {
    X.middleCols(at, d.n()) = d.X;
    y.segment(at, d.n()) = d.y;
    at += d.n();
  }
  return build_stats(X, y);
}

double mean_dir_l2(const ProblemConfig& c, int reps) {
  std::vector<double> all;
  for (int r = 0; r < reps; ++r) {
    const auto ds = generate_scenario(c, static_cast<std::uint64_t>(r)).nodes;
    const RunTrace t = run_dir(c, ds);
    for (std::size_t j = 0; j < ds.size(); ++j) {
      all.push_back(l2_error(t.estimates[j], ds[j].truth->beta, ds[j].truth->q));
    }
  }
  return mean(all);
}

}  // namespace

int main() {
  const ProblemConfig base;  // N=2400, m=30, p=20, theta_max=pi/8
  const int reps = 20;

  guarded(1, "objective correspondence", [] {
    const auto t0 = Clock::now();
    const CheckReport r = check_correspondence(1, 100);
    const double secs = seconds_since(t0);
    report(1, "objective correspondence", r.status == CheckStatus::Pass && r.max_deviation <= 1e-9 && secs < 1.0,
           fmtn("max|G-H|=%.3e over %d instances, %.3fs (tol 1e-9, <1s)", r.max_deviation, r.instances, secs));
  });

  guarded(2, "gradient audit", [] {
    const auto t0 = Clock::now();
    const CheckReport r = check_gradients(1, 100);
    const double secs = seconds_since(t0);
    report(2, "gradient audit", r.status == CheckStatus::Pass && r.max_deviation <= 1e-6 && secs < 5.0,
           fmtn("max rel err=%.3e over %d instances, %.3fs (tol 1e-6, <5s)", r.max_deviation, r.instances, secs));
  });

  guarded(3, "least-squares oracles", [&] {
    const auto ds = generate_scenario(base, 0).nodes;
    double normal_eq = 0.0;
    for (const auto& d : ds) normal_eq = std::max(normal_eq, (d.gram * sls(d) - d.xy).norm());
    const double pooled = (pls(ds) - sls(concat(ds))).norm();
    ProblemConfig c = base;
    c.lambda = 0.0;
    c.rounds = 20000;
    c.rel_tol = 1e-15;
    const RunTrace t = run_dir(c, ds);
    double min_cos = 1.0;
    for (std::size_t j = 0; j < ds.size(); ++j) min_cos = std::min(min_cos, abs_cosine(t.estimates[j], sls(ds[j])));
    report(3, "least-squares oracles", normal_eq <= 1e-10 && pooled <= 1e-10 && min_cos >= 0.999,
           fmtn("max||G b - c||=%.2e, ||pls - concat sls||=%.2e, min|cos(dir@0, sls)|=%.6f", normal_eq, pooled,
                min_cos));
  });

  guarded(4, "descent trend", [&] {
    const auto t0 = Clock::now();
    const auto ds = generate_scenario(base, 0).nodes;
    const RunTrace t = run_dir(base, ds);
    const double secs = seconds_since(t0);
    int good = 0;
    const int pairs = static_cast<int>(t.records.size()) - 1;
    for (int r = 1; r <= pairs; ++r) good += t.records[r].objective <= t.records[r - 1].objective + 1e-8;
    const double frac = pairs > 0 ? static_cast<double>(good) / pairs : 0.0;
    const bool stable = t.stop == StopReason::Converged && t.rounds_executed <= 300;
    report(4, "descent trend", frac >= 0.95 && stable && secs < 120.0,
           fmtn("non-increasing %d/%d (%.3f, need 0.95), stop=%s after %d rounds, %.2fs", good, pairs, frac,
                stop_reason_name(t.stop), t.rounds_executed, secs));
  });

  std::vector<double> dir_cos;
  std::vector<double> sls_cos;
  std::vector<double> cir_cos;
  int improved = 0;
  guarded(5, "improvement over SLS", [&] {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
      const auto ds = generate_scenario(base, static_cast<std::uint64_t>(r)).nodes;
      const RunTrace dir = run_dir(base, ds);
      const RunTrace cir = run_cir(base, ds);
      for (std::size_t j = 0; j < ds.size(); ++j) {
        const double d = abs_cosine(dir.estimates[j], ds[j].truth->beta);
        const double s = abs_cosine(sls(ds[j]), ds[j].truth->beta);
        dir_cos.push_back(d);
        sls_cos.push_back(s);
        cir_cos.push_back(abs_cosine(cir.estimates[j], ds[j].truth->beta));
        improved += d > s;
      }
    }
    const double gap = median(dir_cos) - median(sls_cos);
    const double ratio = static_cast<double>(improved) / static_cast<double>(dir_cos.size());
    const double secs = seconds_since(t0);
    report(5, "improvement over SLS", gap >= 0.10 && ratio >= 0.80 && secs < 1800.0,
           fmtn("median|cos| dir=%.4f sls=%.4f gap=%.4f (need 0.10), improved_ratio=%.4f (need 0.80), %d reps, %.1fs",
                median(dir_cos), median(sls_cos), gap, ratio, reps, secs));
  });

  guarded(6, "DIR-CIR agreement", [&] {
    if (cir_cos.empty()) throw std::runtime_error("criterion 5 did not produce CIR results");
    const double diff = std::abs(mean(dir_cos) - mean(cir_cos));
    report(6, "DIR-CIR agreement", diff <= 0.05,
           fmtn("mean|cos| dir=%.4f cir=%.4f diff=%.4f (tol 0.05)", mean(dir_cos), mean(cir_cos), diff));
  });

  guarded(7, "n-sweep trend", [&] {
    ProblemConfig c = base;
    c.m = 30;
    c.node_n = 50;
    const double at50 = mean_dir_l2(c, reps);
    c.node_n = 120;
    const double at120 = mean_dir_l2(c, reps);
    report(7, "n-sweep trend", at120 < at50, fmtn("mean l2 n=50: %.4f, n=120: %.4f", at50, at120));
  });

  guarded(8, "m-sweep trend", [&] {
    ProblemConfig c = base;
    c.node_n = 60;
    c.m = 4;
    const double at4 = mean_dir_l2(c, reps);
    c.m = 64;
    const double at64 = mean_dir_l2(c, reps);
    report(8, "m-sweep trend", at64 < at4, fmtn("mean l2 m=4: %.4f, m=64: %.4f", at4, at64));
  });

  guarded(9, "initialization robustness", [&] {
    const ProblemConfig toy = toy_config(base);
    const auto ds = generate_scenario(toy, 0).nodes;
    const CheckReport r = check_init_robustness(toy, ds, 5, base.seed);
    report(9, "initialization robustness", r.status == CheckStatus::Pass,
           fmtn("max per-node |cos| spread=%.3e over 5 inits (tol 0.01)", r.max_deviation));
  });

  guarded(10, "communication accounting", [&] {
    const auto ds = generate_scenario(base, 0).nodes;
    const RunTrace t = run_dir(base, ds);
    const std::uint64_t per_round = 2ull * 30 * 20;
    bool counts = true;
    for (std::size_t r = 1; r < t.records.size(); ++r) counts = counts && t.records[r].comm_scalars == per_round;
    counts = counts && comm_cost(t) == per_round * static_cast<std::uint64_t>(t.rounds_executed);

    ProblemConfig c = base;
    c.rounds = 40;
    const RunTrace mem = run_dir(c, ds);
    SocketServerTransport server(ds.size(), "127.0.0.1", 0, std::chrono::seconds(30));
    const auto port = server.port();
    auto workers = make_workers(c, ds, default_init(ds));
    std::vector<std::thread> nodes;
    for (auto& w : workers) {
      nodes.emplace_back([&w, port] { run_socket_node(*w, "127.0.0.1", port, std::chrono::seconds(30)); });
    }
    const RunTrace sock = run_dir_over(c, ds, server);
    for (auto& th : nodes) th.join();
    bool identical = sock.rounds_executed == mem.rounds_executed;
    for (std::size_t j = 0; identical && j < ds.size(); ++j) identical = sock.estimates[j] == mem.estimates[j];
    for (std::size_t r = 1; r < sock.records.size(); ++r) counts = counts && sock.records[r].comm_scalars == per_round;
    report(10, "communication accounting", counts && identical,
           fmtn("%llu scalars/round over %d rounds (expect 2mp=%llu), socket vs in-memory bit-identical: %s",
                static_cast<unsigned long long>(t.records.size() > 1 ? t.records[1].comm_scalars : 0),
                t.rounds_executed, static_cast<unsigned long long>(per_round), identical ? "yes" : "no"));
  });

  guarded(11, "wire format", [] {
    Rng rng(11);
    std::uniform_int_distribution<int> len(0, 64);
    std::normal_distribution<double> z(0.0, 100.0);
    int ok = 0;
    for (int i = 0; i < 1000; ++i) {
      Message m;
      m.kind = rng() % 2 ? MessageKind::Report : MessageKind::Broadcast;
      m.round = rng();
      m.node_id = static_cast<std::uint32_t>(rng());
      m.payload.resize(static_cast<std::size_t>(len(rng)));
      for (auto& x : m.payload) x = z(rng);
      const auto bytes = encode(m);
      ok += bytes.size() == kFrameHeaderBytes + 8 * m.payload.size() && decode(bytes) == m;
    }
    auto code_of = [](const std::vector<std::uint8_t>& b) {
      try {
        decode(b);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::Ok;
    };
    const auto good = encode({MessageKind::Broadcast, 0, 0, {1.0}});
    auto magic = good;
    magic[0] = 0;
    auto kind = good;
    kind[4] = 7;
    const std::vector<std::uint8_t> cut(good.begin(), good.end() - 1);
    const bool errors = good.size() == 29 && code_of(magic) == ErrorCode::BadMagic &&
                        code_of(kind) == ErrorCode::BadKind && code_of(cut) == ErrorCode::FrameIncomplete;
    report(11, "wire format", ok == 1000 && errors,
           fmtn("%d/1000 round trips exact, malformed frames -> BadMagic/BadKind/FrameIncomplete: %s", ok,
                errors ? "yes" : "no"));
  });

  guarded(12, "warm-start tuning", [&] {
    const auto ds = generate_scenario(base, 0).nodes;
    const SplitData split = split_all(ds, base.validation_fraction, base.seed);
    const TuneReport warm = warm_start_tune(base.lambda_grid, split, base);
    const TuneReport sep = separate_tune(base.lambda_grid, split, base);
    const double fixed04 = sep.path.front().val_accuracy;
    report(12, "warm-start tuning", warm.wall_ms < sep.wall_ms && warm.best_accuracy >= fixed04,
           fmtn("wall warm=%.1fms separate=%.1fms, lambda*=%.1f acc=%.4f vs lambda=0.4 acc=%.4f", warm.wall_ms,
                sep.wall_ms, warm.chosen_lambda, warm.best_accuracy, fixed04));
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
