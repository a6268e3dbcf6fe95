#include "dircs/diagnostics.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "csv_util.hpp"
#include "dircs/datagen.hpp"
#include "dircs/harness.hpp"
#include "dircs/metrics.hpp"
#include "dircs/objective.hpp"
#include "dircs/solver.hpp"

namespace dircs {

namespace {

Vector gaussian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

NodeDataset random_dataset(int p, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Matrix X(p, n);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) X(k, i) = g(rng);
    y(i) = coin(rng) ? 1.0 : -1.0;
  }
  return build_stats(std::move(X), std::move(y));
}

std::vector<SignalVector> random_family(int m, int p, Rng& rng) {
  std::vector<SignalVector> out;
  for (int j = 0; j < m; ++j) out.push_back(gaussian(p, rng));
  return out;
}

std::vector<LiftedState> lift_all(const std::vector<SignalVector>& betas) {
  std::vector<LiftedState> out;
  for (const auto& b : betas) out.push_back(lift(b));
  return out;
}

std::string summary(std::initializer_list<std::pair<const char*, double>> items) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : items) {
    os << (first ? "" : " ") << k << '=' << csv::fmt(v);
    first = false;
  }
  return os.str();
}

}  // namespace

const char* check_status_name(CheckStatus s) noexcept {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::ReportOnly: return "report-only";
  }
  return "fail";
}

CheckReport check_correspondence(std::uint64_t seed, int instances) {
  Rng rng(mix_seed(seed, 0xC0DE));
  std::uniform_real_distribution<double> lam(0.0, 2.0);
  CheckReport rep{"correspondence", 0, 0.0, CheckStatus::Pass, seed, {}};
  auto run = [&](int m, int p, double lambda) {
    std::vector<NodeDataset> ds;
    for (int j = 0; j < m; ++j) ds.push_back(random_dataset(p, p + 5 + j, rng));
    const auto betas = random_family(m, p, rng);
    const double g = objective_G(betas, ds, lambda);
    const double h = objective_H(lift_all(betas), ds, lambda);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(g - h));
    ++rep.instances;
  };
  for (int i = 0; i < instances; ++i) run(5, 8, lam(rng));
  const int extra = std::max(1, instances / 10);
  for (int i = 0; i < extra; ++i) run(5, 8, 0.0);
  for (int i = 0; i < extra; ++i) run(1, 1 + i % 8, lam(rng));
  rep.status = rep.max_deviation <= 1e-9 ? CheckStatus::Pass : CheckStatus::Fail;
  rep.detail = "tolerance=1e-9";
  return rep;
}

CheckReport check_gradients(std::uint64_t seed, int instances) {
  Rng rng(mix_seed(seed, 0x6AD));
  std::uniform_real_distribution<double> lam(0.1, 2.0);
  const double h = 1e-5;
  CheckReport rep{"gradients", 0, 0.0, CheckStatus::Pass, seed, {}};
  int skipped = 0;
  auto compare = [&](const Vector& g, const Vector& fd) {
    if (g.norm() < 1e-8) {
      ++skipped;
      return;
    }
    rep.max_deviation = std::max(rep.max_deviation, (g - fd).norm() / g.norm());
  };
  for (int i = 0; i < instances; ++i) {
    const int m = 4;
    const int p = 6;
    const double lambda = lam(rng);
    auto betas = random_family(m, p, rng);
    const int j = i % m;
    const Vector g = exact_penalty_grad(j, betas, lambda);
    Vector fd(p);
    for (int k = 0; k < p; ++k) {
      auto plus = betas;
      auto minus = betas;
      plus[static_cast<std::size_t>(j)](k) += h;
      minus[static_cast<std::size_t>(j)](k) -= h;
      fd(k) = (penalty_G(plus, lambda) - penalty_G(minus, lambda)) / (2.0 * h);
    }
    compare(g, fd);

    const NodeDataset ds = random_dataset(p, p + 10, rng);
    const Vector beta = gaussian(p, rng);
    const Vector psi_j = gaussian(p, rng);
    const double scale = lambda / m;
    const Vector d = psi_local_gradient(lift(beta), psi_j, ds, scale, GradientVariant::Analytic);
    Vector fd2(p);
    for (int k = 0; k < p; ++k) {
      Vector bp = beta;
      Vector bm = beta;
      bp(k) += h;
      bm(k) -= h;
      fd2(k) = (local_surrogate(bp, psi_j, ds, scale) - local_surrogate(bm, psi_j, ds, scale)) / (2.0 * h);
    }
    compare(d.head(p), fd2);
    rep.instances += 1;
  }
  rep.status = rep.max_deviation <= 1e-6 ? CheckStatus::Pass : CheckStatus::Fail;
  rep.detail = "tolerance=1e-6 h=1e-5 skipped=" + std::to_string(skipped);
  return rep;
}

ProblemConfig toy_config(const ProblemConfig& base) {
  ProblemConfig c = base;
  c.m = 5;
  c.p = 2;
  c.node_n = 10;
  c.node_epochs.clear();
  return c;
}

CheckReport check_init_robustness(const ProblemConfig& config, const std::vector<NodeDataset>& datasets, int n_inits,
                                  std::uint64_t seed) {
  CheckReport rep{"init_robustness", n_inits, 0.0, CheckStatus::Pass, seed, {}};
  ProblemConfig cfg = config;
  cfg.rounds = std::max(cfg.rounds, 20000);
  cfg.rel_tol = std::min(cfg.rel_tol, 1e-12);
  const std::size_t m = datasets.size();
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < n_inits; ++i) {
    const auto init = random_init(cfg.m, cfg.p, mix_seed(seed, 0x1417, static_cast<std::uint64_t>(i)), true);
    const RunTrace t = run_dir(cfg, datasets, init);
    for (std::size_t j = 0; j < m; ++j) {
      if (!datasets[j].truth || datasets[j].truth->beta.size() == 0) {
        fail(ErrorCode::InvalidArgument, "init robustness needs ground truth");
      }
      const double c = abs_cosine(t.estimates[j], datasets[j].truth->beta);
      lo[j] = std::min(lo[j], c);
      hi[j] = std::max(hi[j], c);
    }
  }
  std::ostringstream spreads;
  for (std::size_t j = 0; j < m; ++j) {
    const double s = hi[j] - lo[j];
    rep.max_deviation = std::max(rep.max_deviation, s);
    spreads << (j ? ";" : "") << csv::fmt(s);
  }
  rep.status = rep.max_deviation <= 0.01 ? CheckStatus::Pass : CheckStatus::Fail;
  rep.detail = "tolerance=0.01 per_node_spread=" + spreads.str();
  return rep;
}

CheckReport check_invexity(std::uint64_t seed, int instances) {
  Rng rng(mix_seed(seed, 0x1A7E));
  std::uniform_real_distribution<double> lam(0.1, 2.0);
  CheckReport rep{"invexity", 0, 0.0, CheckStatus::ReportOnly, seed, {}};
  double min_value = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int nonneg = 0;
  int degenerate = 0;
  for (int i = 0; i < instances; ++i) {
    std::vector<NodeDataset> ds;
    for (int j = 0; j < 3; ++j) ds.push_back(random_dataset(5, 12, rng));
    const auto a = lift_all(random_family(3, 5, rng));
    const auto b = lift_all(random_family(3, 5, rng));
    try {
      const double v = invexity_probe(a, b, ds, lam(rng));
      min_value = std::min(min_value, v);
      sum += v;
      nonneg += v >= 0.0;
      ++rep.instances;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDenominator) throw;
      ++degenerate;
    }
  }
  // Convex sanity case: lambda = 0 with the displacement kernel.
  double convex_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < std::max(1, instances / 10); ++i) {
    std::vector<NodeDataset> ds;
    for (int j = 0; j < 3; ++j) ds.push_back(random_dataset(5, 12, rng));
    const auto a = lift_all(random_family(3, 5, rng));
    const auto b = lift_all(random_family(3, 5, rng));
    convex_min = std::min(convex_min, invexity_probe(a, b, ds, 0.0, InvexityKernel::Displacement));
  }
  rep.max_deviation = rep.instances > 0 ? -std::min(0.0, min_value) : 0.0;
  rep.detail = summary({{"min", rep.instances ? min_value : 0.0},
                        {"mean", rep.instances ? sum / rep.instances : 0.0},
                        {"nonneg_fraction", rep.instances ? static_cast<double>(nonneg) / rep.instances : 0.0},
                        {"degenerate", static_cast<double>(degenerate)},
                        {"convex_case_min", convex_min}});
  return rep;
}

CheckReport check_transport_equivalence(std::uint64_t seed) {
  CheckReport rep{"transport_equivalence", 1, 0.0, CheckStatus::Pass, seed, {}};
  ProblemConfig cfg;
  cfg.m = 3;
  cfg.p = 4;
  cfg.node_n = 30;
  cfg.rounds = 25;
  cfg.seed = seed;
  const Scenario sc = generate_scenario(cfg, 0);

  InMemoryTransport mem(make_workers(cfg, sc.nodes, {}));
  const RunTrace a = run_dir_over(cfg, sc.nodes, mem);

  auto workers = make_workers(cfg, sc.nodes, {});
  SocketServerTransport sock(sc.nodes.size(), "127.0.0.1", 0, std::chrono::seconds(30));
  const std::uint16_t port = sock.port();
  std::vector<std::exception_ptr> errors(workers.size());
  std::vector<std::thread> threads;
  for (std::size_t j = 0; j < workers.size(); ++j) {
    threads.emplace_back([&, j] {
      try {
        run_socket_node(*workers[j], "127.0.0.1", port, std::chrono::seconds(30));
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  RunTrace b;
  std::exception_ptr server_error;
  try {
    b = run_dir_over(cfg, sc.nodes, sock);
  } catch (...) {
    server_error = std::current_exception();
    sock.close();
  }
  for (auto& t : threads) t.join();
  if (server_error) std::rethrow_exception(server_error);
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  bool identical = a.estimates.size() == b.estimates.size() && a.rounds_executed == b.rounds_executed;
  for (std::size_t j = 0; identical && j < a.estimates.size(); ++j) {
    identical = a.estimates[j] == b.estimates[j];
    rep.max_deviation = std::max(rep.max_deviation, (a.estimates[j] - b.estimates[j]).cwiseAbs().maxCoeff());
  }
  const std::uint64_t per_round = 2ull * static_cast<std::uint64_t>(cfg.m) * static_cast<std::uint64_t>(cfg.p);
  bool counts = true;
  for (const RunTrace* t : std::array<const RunTrace*, 2>{&a, &b}) {
    for (const auto& r : t->records) {
      if (r.round >= 1 && r.comm_scalars != per_round) counts = false;
    }
    if (comm_cost(*t) != per_round * static_cast<std::uint64_t>(t->rounds_executed)) counts = false;
  }
  rep.status = identical && counts ? CheckStatus::Pass : CheckStatus::Fail;
  rep.detail = std::string("bit_identical=") + (identical ? "yes" : "no") + " scalars_per_round=" +
               (counts ? std::to_string(per_round) : "mismatch") + " rounds=" + std::to_string(a.rounds_executed);
  return rep;
}

std::vector<CheckReport> run_check_suite(const ProblemConfig& config, int instances, int n_inits) {
  std::vector<CheckReport> out;
  out.push_back(check_correspondence(config.seed, instances));
  out.push_back(check_gradients(config.seed, instances));
  out.push_back(check_invexity(config.seed, 2 * instances));
  const ProblemConfig toy = toy_config(config);
  const Scenario sc = generate_scenario(toy, 0);
  out.push_back(check_init_robustness(toy, sc.nodes, n_inits, config.seed));
  out.push_back(check_transport_equivalence(config.seed));
  return out;
}

void write_check_csv(const std::vector<CheckReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "check,instances,max_deviation,status,seed,detail\n";
  for (const auto& r : reports) {
    out << r.name << ',' << r.instances << ',' << csv::fmt(r.max_deviation) << ',' << check_status_name(r.status)
        << ',' << r.seed << ",\"" << r.detail << "\"\n";
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace dircs
