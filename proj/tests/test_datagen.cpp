#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "dircs/datagen.hpp"
#include "dircs/objective.hpp"
#include "helpers.hpp"

using namespace dircs;
using namespace testing;

namespace {

double elliptic(const SignalVector& b, const Covariance& cov) { return b.dot(cov.sigma * b); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("AR(1) covariance") {
  const Covariance c = gen_covariance(2, 0.3);
  CHECK(c.sigma(0, 0) == 1.0);
  CHECK(c.sigma(0, 1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(c.sigma(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(gen_covariance(5, 0.0).sigma == Matrix::Identity(5, 5));
  CHECK(gen_covariance(3, 0.3).sigma(0, 2) == doctest::Approx(0.09).epsilon(1e-14));
  const Covariance big = gen_covariance(8, 0.3);
  CHECK((big.lower * big.lower.transpose() - big.sigma).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("base signal has unit elliptic norm and Bernoulli support") {
  Rng rng(1);
  const Covariance cov = gen_covariance(20, 0.3);
  double nonzero = 0.0;
  for (int i = 0; i < 200; ++i) {
    const SignalVector b = gen_base_signal(cov, rng);
    CHECK(std::abs(elliptic(b, cov) - 1.0) <= 1e-12);
    nonzero += static_cast<double>((b.array() != 0.0).count()) / 20.0;
  }
  CHECK(std::abs(nonzero / 200.0 - 0.5) <= 0.1);

  const Covariance one = gen_covariance(1, 0.3);
  for (int i = 0; i < 10; ++i) CHECK(gen_base_signal(one, rng) == Vector{{1.0}});
}

TEST_CASE("signal families satisfy the pairwise similarity bound") {
  const Covariance cov = gen_covariance(20, 0.3);
  for (double theta : {std::numbers::pi / 3, std::numbers::pi / 4, std::numbers::pi / 8}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const SignalVector base = gen_base_signal(cov, rng);
      const auto fam = gen_signal_family(base, 30, theta, cov, rng);
      REQUIRE(fam.size() == 30);
      CHECK(fam[0] == base);
      double min_cos = 1.0;
      for (std::size_t j = 0; j < fam.size(); ++j) {
        CHECK(std::abs(elliptic(fam[j], cov) - 1.0) <= 1e-12);
        for (std::size_t k = j + 1; k < fam.size(); ++k) min_cos = std::min(min_cos, std::sqrt(cos2(fam[j], fam[k])));
      }
      CHECK(min_cos >= std::cos(theta) - 1e-12);
    }
  }
}

TEST_CASE("tiny theta_max gives an almost collinear family") {
  Rng rng(2);
  const Covariance cov = gen_covariance(10, 0.3);
  const auto fam = gen_signal_family(gen_base_signal(cov, rng), 8, 1e-6, cov, rng);
  for (std::size_t j = 0; j < fam.size(); ++j) {
    for (std::size_t k = 0; k < fam.size(); ++k) CHECK(std::sqrt(cos2(fam[j], fam[k])) >= 1.0 - 1e-9);
  }
}

TEST_CASE("planar rotation by a fixed angle") {
  Rng rng(4);
  const Covariance cov = gen_covariance(12, 0.3);
  const double theta = std::numbers::pi / 8;
  FamilyOptions opts;
  opts.fixed_angle = theta / 2;
  const auto fam = gen_signal_family(gen_base_signal(cov, rng), 2, theta, cov, rng, opts);
  CHECK(std::abs(std::sqrt(cos2(fam[0], fam[1])) - std::cos(theta / 2)) <= 1e-10);
}

TEST_CASE("measurement channel") {
  Rng rng(9);
  const Covariance cov = gen_covariance(5, 0.3);
  const SignalVector b = gen_base_signal(cov, rng);
  const NodeDataset clean = gen_measurements(b, 200, cov, 0.0, 1.0, rng);
  const NodeDataset flipped = gen_measurements(b, 200, cov, 0.0, 0.0, rng);
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(clean.y(i) == (clean.X.col(i).dot(b) >= 0.0 ? 1.0 : -1.0));
    CHECK(flipped.y(i) == (flipped.X.col(i).dot(b) >= 0.0 ? -1.0 : 1.0));
  }
  REQUIRE(clean.truth);
  CHECK(clean.truth->beta == b);

  const Covariance id = gen_covariance(2, 0.0);
  const NodeDataset mc = gen_measurements(Vector{{1.0, 0.0}}, 10000, id, 0.0, 0.75, rng);
  int agree = 0;
  for (Eigen::Index i = 0; i < mc.n(); ++i) agree += mc.y(i) == (mc.X(0, i) >= 0.0 ? 1.0 : -1.0);
  CHECK(std::abs(agree / 10000.0 - 0.75) <= 0.02);

  CHECK_THROWS_AS(gen_measurements(b, 5, cov, 0.1, 0.75, rng), Error);
}

TEST_CASE("allocations") {
  Rng rng(1);
  CHECK(allocate_sizes(300, 3, 2, {AllocationKind::Equal}, rng) == std::vector<int>{100, 100, 100});
  CHECK(allocate_sizes(301, 3, 2, {AllocationKind::Equal}, rng) == std::vector<int>{101, 100, 100});

  AllocationSpec dir{AllocationKind::Dirichlet, 0.8, 1e6};
  for (int i = 0; i < 10; ++i) {
    const auto s = allocate_sizes(300, 3, 2, dir, rng);
    CHECK(std::accumulate(s.begin(), s.end(), 0) == 300);
    for (int n : s) CHECK((n >= 95 && n <= 105));
  }

  const auto pl = allocate_sizes(2400, 30, 20, {AllocationKind::PowerLaw, 0.8, 0.5}, rng);
  CHECK(std::accumulate(pl.begin(), pl.end(), 0) == 2400);
  for (std::size_t j = 1; j < pl.size(); ++j) CHECK(pl[j] <= pl[j - 1]);
  CHECK(pl.front() > pl.back());
  for (int n : pl) CHECK(n >= 25);

  AllocationSpec skew{AllocationKind::Dirichlet, 0.8, 0.05};
  for (int i = 0; i < 20; ++i) {
    const auto s = allocate_sizes(1000, 20, 10, skew, rng);
    CHECK(std::accumulate(s.begin(), s.end(), 0) == 1000);
    for (int n : s) CHECK(n >= 15);
  }
  try {
    allocate_sizes(100, 10, 20, {AllocationKind::Equal}, rng);
    FAIL("expected InfeasibleAllocation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleAllocation);
  }
}

TEST_CASE("validation split partitions the measurements") {
  Rng rng(6);
  const NodeDataset ds = random_dataset(4, 100, rng);
  const auto [train, val] = split_validation(ds, 0.2, 42);
  CHECK(train.n() == 80);
  CHECK(val.n() == 20);
  std::multiset<double> all;
  std::multiset<double> parts;
  for (Eigen::Index i = 0; i < ds.n(); ++i) all.insert(ds.X(0, i));
  for (Eigen::Index i = 0; i < train.n(); ++i) parts.insert(train.X(0, i));
  for (Eigen::Index i = 0; i < val.n(); ++i) parts.insert(val.X(0, i));
  CHECK(all == parts);
  CHECK(train.gram.isApprox(train.X * train.X.transpose() / 80.0));

  const auto [train2, val2] = split_validation(ds, 0.2, 42);
  CHECK(train2.X == train.X);
  CHECK(val2.y == val.y);

  const NodeDataset small = random_dataset(10, 12, rng);
  try {
    split_validation(small, 0.2, 1);
    FAIL("expected TooFewMeasurements");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewMeasurements);
  }
}

TEST_CASE("scenario generation is deterministic and matches the allocation") {
  ProblemConfig c;
  const Scenario a = generate_scenario(c, 0);
  const Scenario b = generate_scenario(c, 0);
  REQUIRE(a.nodes.size() == 30);
  int total = 0;
  for (std::size_t j = 0; j < a.nodes.size(); ++j) {
    CHECK(a.nodes[j].X == b.nodes[j].X);
    CHECK(a.nodes[j].y == b.nodes[j].y);
    CHECK(a.nodes[j].p() == 20);
    total += static_cast<int>(a.nodes[j].n());
  }
  CHECK(total == 2400);
  const Scenario other = generate_scenario(c, 1);
  CHECK(other.nodes[0].X != a.nodes[0].X);

  double min_cos = 1.0;
  for (std::size_t j = 0; j < a.nodes.size(); ++j) {
    for (std::size_t k = j + 1; k < a.nodes.size(); ++k) {
      min_cos = std::min(min_cos, std::sqrt(cos2(a.nodes[j].truth->beta, a.nodes[k].truth->beta)));
    }
  }
  CHECK(min_cos >= std::cos(c.theta_max) - 1e-12);
}

TEST_CASE("CSV export and import round trip exactly") {
  ProblemConfig c = small_config(3, 4, 40);
  const Scenario sc = generate_scenario(c, 0);
  const std::string dir = scratch_dir("export");
  export_scenario(sc, dir);
  CHECK(std::filesystem::exists(dir + "/truth.csv"));
  CHECK(slurp(dir + "/node_0.csv").rfind("# p,n,sigma,q\n", 0) == 0);
  const auto back = import_scenario(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(back[j].X == sc.nodes[j].X);
    CHECK(back[j].y == sc.nodes[j].y);
    REQUIRE(back[j].truth);
    CHECK(back[j].truth->beta == sc.nodes[j].truth->beta);
    CHECK(back[j].truth->q == sc.nodes[j].truth->q);
    CHECK(back[j].truth->sigma == sc.nodes[j].truth->sigma);
  }

  const std::string dir2 = scratch_dir("export2");
  export_scenario(generate_scenario(c, 0), dir2);
  for (const char* f : {"/node_0.csv", "/node_2.csv", "/truth.csv"}) CHECK(slurp(dir + f) == slurp(dir2 + f));
}

TEST_CASE("import reports malformed files with line numbers") {
  const std::string dir = scratch_dir("bad_import");
  {
    std::ofstream out(dir + "/node_0.csv");
    out << "# p,n,sigma,q\n# 2,2,0.1,0.75\n1,2,1\n1,x,-1\n";
  }
  try {
    import_node_file(dir + "/node_0.csv");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("external signals bypass the family generator") {
  const std::string dir = scratch_dir("signals");
  {
    std::ofstream out(dir + "/signals.csv");
    out << "# beta_1,beta_2,beta_3\n1,0,0\n0.9,0.1,0\n0.8,0,0.2\n";
  }
  const auto sig = import_signals(dir + "/signals.csv");
  REQUIRE(sig.size() == 3);
  CHECK(sig[1] == Vector{{0.9, 0.1, 0.0}});
  ProblemConfig c = small_config(3, 3, 30);
  const Scenario sc = generate_scenario_from_signals(c, sig, 0);
  REQUIRE(sc.nodes.size() == 3);
  CHECK(sc.nodes[2].truth->beta == sig[2]);
}
