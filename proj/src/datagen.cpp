#include "dircs/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "csv_util.hpp"

namespace dircs {

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(master) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

Covariance gen_covariance(int p, double rho) {
  if (p < 1) fail(ErrorCode::InvalidArgument, "p must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorCode::InvalidArgument, "covariance decay must lie in [0, 1)");
  Covariance cov;
  cov.sigma.resize(p, p);
  for (int k = 0; k < p; ++k) {
    for (int l = 0; l < p; ++l) cov.sigma(k, l) = std::pow(rho, std::abs(k - l));
  }
  Eigen::LLT<Matrix> llt(cov.sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "covariance is not positive definite");
  cov.lower = llt.matrixL();
  return cov;
}

namespace {

double elliptic_norm(const Vector& beta, const Matrix& sigma) { return std::sqrt(beta.dot(sigma * beta)); }

double abs_cos(const Vector& a, const Vector& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

}  // namespace

SignalVector gen_base_signal(const Covariance& cov, Rng& rng) {
  const Eigen::Index p = cov.sigma.rows();
  std::bernoulli_distribution coin(0.5);
  for (int attempt = 0; attempt < 100; ++attempt) {
    SignalVector beta(p);
    for (Eigen::Index k = 0; k < p; ++k) beta(k) = coin(rng) ? 1.0 : 0.0;
    if (beta.squaredNorm() == 0.0) continue;
    return beta / elliptic_norm(beta, cov.sigma);
  }
  fail(ErrorCode::DegenerateSignal, "base signal draw was all zero 100 times");
}

std::vector<SignalVector> gen_signal_family(const SignalVector& base, int m, double theta_max,
                                            const Covariance& cov, Rng& rng, const FamilyOptions& opts) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "family size must be positive");
  if (!(theta_max > 0.0 && theta_max < std::numbers::pi / 2)) {
    fail(ErrorCode::InvalidArgument, "theta_max must lie in (0, pi/2)");
  }
  const Eigen::Index p = base.size();
  if (base.norm() == 0.0) fail(ErrorCode::ZeroVector, "base signal is zero");
  const Vector base_dir = base / base.norm();
  const double bound = std::cos(theta_max);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    std::vector<SignalVector> family;
    family.reserve(static_cast<std::size_t>(m));
    family.push_back(base);
    if (m > 1 && p < 2) fail(ErrorCode::SimilarityUnsatisfiable, "a rotation plane needs p >= 2");

    Vector axis = Vector::Zero(p);
    if (m > 1) {
      while (axis.norm() < 1e-8) {
        Vector z(p);
        for (Eigen::Index k = 0; k < p; ++k) z(k) = gauss(rng);
        axis = z - z.dot(base_dir) * base_dir;
      }
      axis.normalize();
    }

    for (int j = 1; j < m; ++j) {
      double angle = 0.0;
      if (opts.fixed_angle) {
        angle = *opts.fixed_angle;
      } else {
        const double u = unit(rng) * theta_max;
        angle = unit(rng) < 0.5 ? u : std::numbers::pi - u;
      }
      // The anti-aligned branch rotates the other way so its line stays on
      // the same side of the base line.
      const double side = angle > std::numbers::pi / 2 ? -1.0 : 1.0;
      Vector beta = std::cos(angle) * base_dir + side * std::sin(angle) * axis;
      beta /= elliptic_norm(beta, cov.sigma);
      family.push_back(std::move(beta));
    }

    bool ok = true;
    for (int j = 0; j < m && ok; ++j) {
      for (int k = j + 1; k < m && ok; ++k) ok = abs_cos(family[j], family[k]) >= bound - 1e-12;
    }
    if (ok) return family;
  }
  fail(ErrorCode::SimilarityUnsatisfiable,
       "no signal family met the pairwise similarity bound after " + std::to_string(opts.max_attempts) +
           " attempts");
}

NodeDataset gen_measurements(const SignalVector& beta, int n, const Covariance& cov, double sigma, double q,
                             Rng& rng) {
  const Eigen::Index p = beta.size();
  if (cov.lower.rows() != p) fail(ErrorCode::DimensionMismatch, "covariance factor does not match signal");
  if (n <= p) fail(ErrorCode::TooFewMeasurements, "need n > p measurements");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix Z(p, n);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) Z(k, i) = gauss(rng);
  }
  Matrix X = cov.lower * Z;
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    const double eps = sigma * gauss(rng);
    const double flip = unit(rng) < q ? 1.0 : -1.0;
    const double z = X.col(i).dot(beta) + eps;
    y(i) = flip * (z >= 0.0 ? 1.0 : -1.0);
  }
  return build_stats(std::move(X), std::move(y), GroundTruth{beta, sigma, q});
}

namespace {

std::vector<int> round_and_clamp(const std::vector<double>& weights, int total, int floor_size) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> sizes(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const int rounded = static_cast<int>(std::lround(total * weights[j] / sum));
    sizes[j] = std::max(rounded, floor_size);
  }
  const auto largest = std::distance(sizes.begin(), std::max_element(sizes.begin(), sizes.end()));
  const int assigned = std::accumulate(sizes.begin(), sizes.end(), 0);
  sizes[static_cast<std::size_t>(largest)] += total - assigned;
  if (sizes[static_cast<std::size_t>(largest)] < floor_size) {
    fail(ErrorCode::InfeasibleAllocation, "cannot satisfy the minimum node size after rounding");
  }
  return sizes;
}

}  // namespace

std::vector<int> allocate_sizes(int total, int m, int p, const AllocationSpec& spec, Rng& rng) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "m must be positive");
  const int floor_size = p + 5;
  if (static_cast<long long>(total) < static_cast<long long>(m) * floor_size) {
    fail(ErrorCode::InfeasibleAllocation, "N=" + std::to_string(total) + " is below m*(p+5)=" +
                                              std::to_string(static_cast<long long>(m) * floor_size));
  }
  switch (spec.kind) {
    case AllocationKind::Equal: {
      std::vector<int> sizes(static_cast<std::size_t>(m), total / m);
      for (int j = 0; j < total % m; ++j) ++sizes[static_cast<std::size_t>(j)];
      return sizes;
    }
    case AllocationKind::PowerLaw: {
      std::vector<double> w(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) w[static_cast<std::size_t>(j)] = std::pow(j + 1.0, -spec.exponent);
      return round_and_clamp(w, total, floor_size);
    }
    case AllocationKind::Dirichlet: {
      if (!(spec.alpha > 0.0)) fail(ErrorCode::InvalidArgument, "dirichlet alpha must be positive");
      std::gamma_distribution<double> gamma(spec.alpha, 1.0);
      std::vector<double> w(static_cast<std::size_t>(m));
      double sum = 0.0;
      while (!(sum > 0.0)) {
        sum = 0.0;
        for (auto& x : w) sum += (x = gamma(rng));
      }
      return round_and_clamp(w, total, floor_size);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown allocation kind");
}

std::pair<NodeDataset, NodeDataset> split_validation(const NodeDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5)) fail(ErrorCode::InvalidArgument, "validation fraction must lie in (0, 0.5)");
  const Eigen::Index n = ds.n();
  const auto n_train = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * (1.0 - fraction)));
  if (n_train <= ds.p() || n_train >= n) {
    fail(ErrorCode::TooFewMeasurements, "node with n=" + std::to_string(n) + " cannot keep more than p=" +
                                            std::to_string(ds.p()) + " training measurements");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::sort(order.begin(), order.begin() + n_train);
  std::sort(order.begin() + n_train, order.end());

  auto gather = [&](std::size_t begin, std::size_t end) {
    Matrix X(ds.p(), static_cast<Eigen::Index>(end - begin));
    Vector y(static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      X.col(static_cast<Eigen::Index>(i - begin)) = ds.X.col(order[i]);
      y(static_cast<Eigen::Index>(i - begin)) = ds.y(order[i]);
    }
    return build_stats(std::move(X), std::move(y), ds.truth);
  };
  return {gather(0, static_cast<std::size_t>(n_train)), gather(static_cast<std::size_t>(n_train), order.size())};
}

namespace {

std::vector<int> node_sizes(const ProblemConfig& config, Rng& rng) {
  if (config.node_n > 0) {
    if (config.node_n <= config.p) fail(ErrorCode::TooFewMeasurements, "node_n must exceed p");
    return std::vector<int>(static_cast<std::size_t>(config.m), config.node_n);
  }
  AllocationSpec spec{config.allocation, config.power_law_exponent, config.dirichlet_alpha};
  return allocate_sizes(config.total_n, config.m, config.p, spec, rng);
}

}  // namespace

Scenario generate_scenario_from_signals(const ProblemConfig& config, const std::vector<SignalVector>& signals,
                                        std::uint64_t replication) {
  config.validate();
  if (static_cast<int>(signals.size()) != config.m) {
    fail(ErrorCode::MismatchedNodes, "expected " + std::to_string(config.m) + " signals, got " +
                                         std::to_string(signals.size()));
  }
  Scenario sc;
  sc.config = config;
  sc.cov = gen_covariance(config.p, config.covariance_decay);
  Rng scenario_rng(mix_seed(config.seed, replication, 0));
  const auto sizes = node_sizes(config, scenario_rng);

  std::discrete_distribution<int> pick_channel(config.channel_probs.begin(), config.channel_probs.end());
  sc.nodes.reserve(signals.size());
  for (int j = 0; j < config.m; ++j) {
    if (signals[static_cast<std::size_t>(j)].size() != config.p) {
      fail(ErrorCode::DimensionMismatch, "signal " + std::to_string(j) + " does not have length p");
    }
    const auto& ch = config.channels[static_cast<std::size_t>(pick_channel(scenario_rng))];
    Rng node_rng(mix_seed(config.seed, replication, static_cast<std::uint64_t>(j) + 1));
    sc.nodes.push_back(gen_measurements(signals[static_cast<std::size_t>(j)], sizes[static_cast<std::size_t>(j)],
                                        sc.cov, ch.sigma, ch.q, node_rng));
  }
  return sc;
}

Scenario generate_scenario(const ProblemConfig& config, std::uint64_t replication) {
  config.validate();
  const Covariance cov = gen_covariance(config.p, config.covariance_decay);
  Rng signal_rng(mix_seed(config.seed, replication, 0x5157A1ULL));
  const SignalVector base = gen_base_signal(cov, signal_rng);
  const auto family = gen_signal_family(base, config.m, config.theta_max, cov, signal_rng);
  return generate_scenario_from_signals(config, family, replication);
}

void export_scenario(const Scenario& scenario, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());

  std::ofstream truth(fs::path(dir) / "truth.csv");
  if (!truth) fail(ErrorCode::IoError, "cannot write truth.csv in " + dir);
  truth << "# node_id,beta_1..beta_p,sigma,q\n";
  for (std::size_t j = 0; j < scenario.nodes.size(); ++j) {
    const NodeDataset& ds = scenario.nodes[j];
    const fs::path path = fs::path(dir) / ("node_" + std::to_string(j) + ".csv");
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    const double sigma = ds.truth ? ds.truth->sigma : 0.0;
    const double q = ds.truth ? ds.truth->q : 1.0;
    out << "# p,n,sigma,q\n";
    out << "# " << ds.p() << ',' << ds.n() << ',' << csv::fmt(sigma) << ',' << csv::fmt(q) << '\n';
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      for (Eigen::Index k = 0; k < ds.p(); ++k) out << csv::fmt(ds.X(k, i)) << ',';
      out << (ds.y(i) > 0 ? "1" : "-1") << '\n';
    }
    if (ds.truth) {
      truth << j;
      for (Eigen::Index k = 0; k < ds.p(); ++k) truth << ',' << csv::fmt(ds.truth->beta(k));
      truth << ',' << csv::fmt(sigma) << ',' << csv::fmt(q) << '\n';
    }
  }
}

NodeDataset import_node_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  long p = -1;
  long n = -1;
  double sigma = 0.0;
  double q = 1.0;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::blank(line)) continue;
    if (line[0] == '#') {
      auto fields = csv::split(line.substr(1));
      if (fields.size() == 4 && csv::is_number(fields[0])) {
        p = std::lround(csv::to_double(fields[0], path, line_no));
        n = std::lround(csv::to_double(fields[1], path, line_no));
        sigma = csv::to_double(fields[2], path, line_no);
        q = csv::to_double(fields[3], path, line_no);
      }
      continue;
    }
    auto fields = csv::split(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(csv::to_double(f, path, line_no));
    if (p >= 0 && static_cast<long>(row.size()) != p + 1) {
      fail(ErrorCode::ConfigError, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(p + 1) +
                                       " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ConfigError, path + ": no measurement rows");
  if (p < 0) p = static_cast<long>(rows.front().size()) - 1;
  if (n >= 0 && n != static_cast<long>(rows.size())) {
    fail(ErrorCode::ConfigError, path + ": header declares n=" + std::to_string(n) + " but file has " +
                                     std::to_string(rows.size()) + " rows");
  }
  Matrix X(p, static_cast<Eigen::Index>(rows.size()));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<long>(rows[i].size()) != p + 1) fail(ErrorCode::ConfigError, path + ": ragged rows");
    for (long k = 0; k < p; ++k) X(k, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(k)];
    y(static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(p)];
  }
  auto ds = build_stats(std::move(X), std::move(y));
  ds.truth = GroundTruth{SignalVector(), sigma, q};
  return ds;
}

std::vector<NodeDataset> import_scenario(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<NodeDataset> nodes;
  for (std::size_t j = 0;; ++j) {
    const fs::path path = fs::path(dir) / ("node_" + std::to_string(j) + ".csv");
    if (!fs::exists(path)) break;
    nodes.push_back(import_node_file(path.string()));
  }
  if (nodes.empty()) fail(ErrorCode::IoError, "no node_<id>.csv files in " + dir);

  const fs::path truth_path = fs::path(dir) / "truth.csv";
  std::vector<bool> has_truth(nodes.size(), false);
  if (fs::exists(truth_path)) {
    std::ifstream in(truth_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (csv::blank(line) || line[0] == '#') continue;
      auto fields = csv::split(line);
      const auto id = static_cast<std::size_t>(std::lround(csv::to_double(fields.at(0), truth_path.string(), line_no)));
      if (id >= nodes.size()) fail(ErrorCode::ConfigError, truth_path.string() + ": unknown node id");
      const Eigen::Index p = nodes[id].p();
      if (static_cast<Eigen::Index>(fields.size()) != p + 3) {
        fail(ErrorCode::ConfigError, truth_path.string() + ":" + std::to_string(line_no) + ": wrong field count");
      }
      SignalVector beta(p);
      for (Eigen::Index k = 0; k < p; ++k) {
        beta(k) = csv::to_double(fields[static_cast<std::size_t>(k + 1)], truth_path.string(), line_no);
      }
      const double sigma = csv::to_double(fields[static_cast<std::size_t>(p + 1)], truth_path.string(), line_no);
      const double q = csv::to_double(fields[static_cast<std::size_t>(p + 2)], truth_path.string(), line_no);
      nodes[id].truth = GroundTruth{std::move(beta), sigma, q};
      has_truth[id] = true;
    }
  }
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (!has_truth[j]) nodes[j].truth.reset();
  }
  return nodes;
}

std::vector<SignalVector> import_signals(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<SignalVector> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::blank(line) || line[0] == '#') continue;
    auto fields = csv::split(line);
    SignalVector beta(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k) beta(static_cast<Eigen::Index>(k)) = csv::to_double(fields[k], path, line_no);
    if (!out.empty() && beta.size() != out.front().size()) {
      fail(ErrorCode::ConfigError, path + ":" + std::to_string(line_no) + ": signal length differs from first row");
    }
    out.push_back(std::move(beta));
  }
  if (out.empty()) fail(ErrorCode::ConfigError, path + ": no signals");
  return out;
}

}  // namespace dircs
