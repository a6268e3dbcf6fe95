#include <doctest.h>

#include <cmath>

#include "dircs/baselines.hpp"
#include "dircs/metrics.hpp"
#include "dircs/objective.hpp"
#include "dircs/solver.hpp"
#include "helpers.hpp"

using namespace dircs;
using namespace testing;

namespace {

NodeDataset hand_dataset() {
  Matrix X(2, 3);
  X << 1, 0, 1,
       0, 1, 1;
  return build_stats(X, Vector{{1.0, -1.0, 1.0}});
}

LocalParams plain_params(GradientVariant variant) {
  LocalParams lp;
  lp.lambda = 1.0;
  lp.m = 2;
  lp.step_size = 0.05;
  lp.epochs = 1;
  lp.variant = variant;
  lp.sign_aligned = false;
  lp.trace_matched = false;
  return lp;
}

}  // namespace

TEST_CASE("zero local epochs leave the estimate unchanged") {
  Rng rng(1);
  const NodeDataset ds = random_dataset(3, 20, rng);
  LocalParams lp;
  lp.epochs = 0;
  const Vector b = gaussian(3, rng);
  CHECK(local_update(ds, b, gaussian(3, rng), lp) == b);
}

TEST_CASE("single analytic step matches hand arithmetic") {
  const NodeDataset ds = hand_dataset();
  const Vector beta{{1.0, 2.0}};
  // psi_j = psi - beta/||beta|| = [1, 0]; s = 1/2; t = beta.psi_j = 1; ||beta||^2 = 5.
  const Vector psi = Vector{{1.0, 0.0}} + beta / beta.norm();
  const Vector penalty = -0.5 * (Vector{{0.2, 0.0}} - beta / 25.0);
  const Vector d = Vector{{2.0 / 3.0, 5.0 / 3.0}} + penalty;
  const Vector expected = beta - 0.05 * d;
  const SignalVector got = local_update(ds, beta, psi, plain_params(GradientVariant::Analytic));
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("single literal-variant step with a vanishing neighbor direction") {
  const NodeDataset ds = hand_dataset();
  const Vector beta{{1.0, 2.0}};
  const Vector psi = beta / beta.norm();
  const SignalVector got = local_update(ds, beta, psi, plain_params(GradientVariant::PaperLiteral));
  CHECK(std::abs(got(0) - (1.0 - 0.05 * 7.0 / 6.0)) <= 1e-15);
  CHECK(std::abs(got(1) - (2.0 - 0.05 * 8.0 / 3.0)) <= 1e-15);
}

TEST_CASE("unpenalized local descent converges to least squares") {
  Rng rng(2);
  const NodeDataset ds = random_dataset(4, 200, rng);
  LocalParams lp;
  lp.lambda = 0.0;
  lp.m = 3;
  lp.step_size = 0.1;
  lp.epochs = 3000;
  const SignalVector b = local_update(ds, ds.xy, Vector::Zero(4), lp);
  CHECK((b - sls(ds)).norm() <= 1e-4);
}

TEST_CASE("local surrogate never increases over an epoch") {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const NodeDataset ds = random_dataset(5, 30, rng);
    LocalParams lp;
    lp.lambda = 1.5;
    lp.m = 5;
    lp.step_size = 0.5;
    lp.epochs = 1;
    const Vector beta = gaussian(5, rng);
    const Vector psi = gaussian(5, rng) * 2.0;
    const Vector psi_j = neighbor_direction(beta, psi, lp);
    const double s = penalty_scale_value(lp.lambda, lp.m, lp.penalty_scale);
    const SignalVector next = local_update(ds, beta, psi, lp);
    CHECK(local_surrogate(next, psi_j, ds, s) <= local_surrogate(beta, psi_j, ds, s));
  }
}

TEST_CASE("neighbor direction") {
  LocalParams lp;
  lp.m = 5;
  const Vector beta{{3.0, 0.0}};
  const Vector psi{{2.0, 1.0}};
  CHECK(neighbor_direction(beta, psi, lp).norm() == doctest::Approx(2.0).epsilon(1e-15));
  lp.trace_matched = false;
  CHECK(neighbor_direction(beta, psi, lp) == Vector{{1.0, 1.0}});
  lp.sign_aligned = false;
  CHECK(neighbor_direction(beta, Vector{{-2.0, 1.0}}, lp) == Vector{{-3.0, 1.0}});
  lp.sign_aligned = true;
  CHECK(neighbor_direction(beta, Vector{{-2.0, 1.0}}, lp) == Vector{{-1.0, 1.0}});
}

TEST_CASE("server aggregate") {
  CHECK(server_aggregate({Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}}) == Vector{{1.0, 1.0}});
  CHECK(server_aggregate({Vector{{1.0, 0.0}}, Vector{{-1.0, 0.0}}}) == Vector{{0.0, 0.0}});
  Rng rng(4);
  auto betas = random_betas(5, 3, rng);
  const Vector psi = server_aggregate(betas);
  betas[2] *= 7.0;
  CHECK((server_aggregate(betas) - psi).norm() <= 1e-15);
  try {
    server_aggregate({Vector{{1.0, 0.0}}, Vector{{0.0, 0.0}}});
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
    CHECK(std::string(e.what()).find("node 1") != std::string::npos);
  }
}

TEST_CASE("sign-aligned aggregate") {
  const Vector psi = aligned_aggregate({Vector{{1.0, 0.0}}, Vector{{-1.0, 0.0}}}, nullptr);
  CHECK(psi.norm() == doctest::Approx(2.0));
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto betas = random_betas(6, 3, rng);
    const Vector a = aligned_aggregate(betas, nullptr);
    Vector fixed = Vector::Zero(3);
    for (const auto& b : betas) fixed += (b.normalized().dot(a) >= 0.0 ? 1.0 : -1.0) * b.normalized();
    CHECK((fixed - a).norm() <= 1e-12);
    betas[0] = -betas[0];
    const Vector flipped = aligned_aggregate(betas, &a);
    CHECK((flipped - a).norm() <= 1e-12);
  }
}

TEST_CASE("StopRule") {
  StopRule r(100, 1e-6, 3);
  CHECK_FALSE(r.update(1, 1.0, 1.0));
  CHECK_FALSE(r.update(2, 1.0, 1.0));
  CHECK(r.update(3, 1.0, 1.0));
  StopRule once(100, 1e-6, 1);
  CHECK_FALSE(once.update(1, 1.0, 1.0));
  CHECK(once.update(2, 1.0, 1.0));
  StopRule reset(100, 1e-6, 2);
  CHECK_FALSE(reset.update(1, 1.0, 1.0));
  CHECK_FALSE(reset.update(2, 1.0, 0.5));
  CHECK_FALSE(reset.update(3, 0.5, 0.5));
  CHECK(reset.update(4, 0.5, 0.5));
}

TEST_CASE("DIR trace bookkeeping") {
  const ProblemConfig c = small_config(4, 5, 80);
  const auto ds = generate_scenario(c, 0).nodes;
  const RunTrace t = run_dir(c, ds, {}, {1, true});
  REQUIRE(!t.records.empty());
  CHECK(t.records.front().round == 0);
  CHECK(t.records.front().comm_scalars == 0);
  CHECK(t.init_scalars == 4u * 5u);
  CHECK(t.rounds_executed <= c.rounds);
  CHECK(static_cast<int>(t.records.size()) == t.rounds_executed + 1);
  for (std::size_t r = 1; r < t.records.size(); ++r) {
    CHECK(t.records[r].comm_scalars == 2u * 4u * 5u);
    CHECK(t.records[r].betas.size() == 4);
  }
  CHECK(comm_cost(t) == 2ull * 4 * 5 * static_cast<std::uint64_t>(t.rounds_executed));
  CHECK(t.records.back().objective == doctest::Approx(objective_G(t.estimates, ds, c.lambda)).epsilon(1e-14));
  if (t.stop == StopReason::Converged) CHECK(t.rounds_executed >= 2);
}

TEST_CASE("DIR is deterministic and independent of the worker count") {
  const ProblemConfig c = small_config(6, 5, 60);
  const auto ds = generate_scenario(c, 3).nodes;
  const RunTrace a = run_dir(c, ds, {}, {1, false});
  const RunTrace b = run_dir(c, ds, {}, {4, false});
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t j = 0; j < a.estimates.size(); ++j) CHECK(a.estimates[j] == b.estimates[j]);
  for (std::size_t r = 0; r < a.records.size(); ++r) CHECK(a.records[r].objective == b.records[r].objective);
}

TEST_CASE("DIR at lambda zero recovers the per-node least-squares directions") {
  ProblemConfig c = small_config(3, 5, 100);
  c.lambda = 0.0;
  c.rounds = 2000;
  c.rel_tol = 1e-13;
  const auto ds = generate_scenario(c, 1).nodes;
  const RunTrace t = run_dir(c, ds);
  for (std::size_t j = 0; j < ds.size(); ++j) CHECK(abs_cosine(t.estimates[j], sls(ds[j])) >= 0.999);
}

TEST_CASE("identical random initializations") {
  const auto init = random_init(4, 3, 9, true);
  for (const auto& b : init) CHECK(b == init.front());
  const auto distinct = random_init(4, 3, 9, false);
  CHECK(distinct[0] != distinct[1]);
  CHECK(random_init(4, 3, 9, false)[2] == distinct[2]);
}

TEST_CASE("per-node epochs of zero freeze every node") {
  ProblemConfig c = small_config(3, 4, 50);
  c.node_epochs = {0, 0, 0};
  c.rounds = 5;
  const auto ds = generate_scenario(c, 0).nodes;
  const RunTrace t = run_dir(c, ds);
  const auto init = default_init(ds);
  for (std::size_t j = 0; j < ds.size(); ++j) CHECK(t.estimates[j] == init[j]);
}

TEST_CASE("CIR at lambda zero is plain gradient descent per node") {
  ProblemConfig c = small_config(3, 4, 50);
  c.lambda = 0.0;
  c.rounds = 40;
  c.rel_tol = 0.0;
  const auto ds = generate_scenario(c, 2).nodes;
  const RunTrace t = run_cir(c, ds);
  CHECK(t.centralized);
  CHECK(comm_cost(t) == 0);
  CHECK(t.step_halvings == 0);
  CHECK(t.rounds_executed == 40);
  for (std::size_t j = 0; j < ds.size(); ++j) {
    Vector b = ds[j].xy;
    for (int r = 0; r < 40; ++r) b -= c.step_size * 2.0 * (ds[j].gram * b - ds[j].xy);
    CHECK((t.estimates[j] - b).norm() <= 1e-12);
  }
}

TEST_CASE("CIR direction is a descent direction") {
  Rng rng(6);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<NodeDataset> ds;
    for (int j = 0; j < 4; ++j) ds.push_back(random_dataset(5, 30, rng));
    const auto betas = random_betas(4, 5, rng);
    const double lambda = 1.0;
    std::vector<SignalVector> next = betas;
    for (int j = 0; j < 4; ++j) {
      const Vector g = 2.0 * (ds[j].gram * betas[j] - ds[j].xy) + exact_penalty_grad(j, betas, lambda);
      next[j] = betas[j] - 1e-5 * g;
    }
    CHECK(objective_G(next, ds, lambda) < objective_G(betas, ds, lambda));
  }
}

TEST_CASE("CIR objective never rises by more than the tolerance") {
  const ProblemConfig c = small_config(5, 5, 60);
  const auto ds = generate_scenario(c, 4).nodes;
  const RunTrace t = run_cir(c, ds);
  for (std::size_t r = 1; r < t.records.size(); ++r) {
    CHECK(t.records[r].objective <= t.records[r - 1].objective + 1e-8);
  }
}
