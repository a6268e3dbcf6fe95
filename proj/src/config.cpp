#include "dircs/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "csv_util.hpp"

namespace dircs {

namespace {

[[noreturn]] void bad_value(const std::string& what) { fail(ErrorCode::ConfigError, what); }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

long long parse_integer(const std::string& text) {
  const double x = parse_real(text);
  if (x != std::floor(x) || std::abs(x) > 9e15) bad_value("expected an integer, got '" + text + "'");
  return static_cast<long long>(x);
}

int parse_int(const std::string& text) {
  const long long x = parse_integer(text);
  if (x < -2147483647LL || x > 2147483647LL) bad_value("integer out of range: '" + text + "'");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = csv::trim(text);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    bad_value("expected an unsigned integer, got '" + text + "'");
  }
  errno = 0;
  const unsigned long long x = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) bad_value("unsigned integer out of range: '" + text + "'");
  return x;
}

bool parse_bool(const std::string& text) {
  const std::string t = lower(csv::trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  bad_value("expected a boolean, got '" + text + "'");
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : csv::split(text, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : parse_list(text)) out.push_back(parse_real(item));
  return out;
}

std::vector<ChannelSpec> parse_channels(const std::string& text) {
  std::vector<ChannelSpec> out;
  for (const auto& item : parse_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) bad_value("channel '" + item + "' must be written sigma:q");
    out.push_back({parse_real(item.substr(0, colon)), parse_real(item.substr(colon + 1))});
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"p", [](auto& c, const auto& v) { c.problem.p = parse_int(v); }},
      {"m", [](auto& c, const auto& v) { c.problem.m = parse_int(v); }},
      {"total_n", [](auto& c, const auto& v) { c.problem.total_n = parse_int(v); }},
      {"node_n", [](auto& c, const auto& v) { c.problem.node_n = parse_int(v); }},
      {"allocation",
       [](auto& c, const auto& v) {
         const std::string t = lower(csv::trim(v));
         if (t == "equal") c.problem.allocation = AllocationKind::Equal;
         else if (t == "power_law") c.problem.allocation = AllocationKind::PowerLaw;
         else if (t == "dirichlet") c.problem.allocation = AllocationKind::Dirichlet;
         else bad_value("allocation must be equal, power_law or dirichlet");
       }},
      {"power_law_exponent", [](auto& c, const auto& v) { c.problem.power_law_exponent = parse_real(v); }},
      {"dirichlet_alpha", [](auto& c, const auto& v) { c.problem.dirichlet_alpha = parse_real(v); }},
      {"theta_max", [](auto& c, const auto& v) { c.problem.theta_max = parse_real(v); }},
      {"covariance_decay", [](auto& c, const auto& v) { c.problem.covariance_decay = parse_real(v); }},
      {"channels", [](auto& c, const auto& v) { c.problem.channels = parse_channels(v); }},
      {"channel_probs", [](auto& c, const auto& v) { c.problem.channel_probs = parse_real_list(v); }},
      {"lambda", [](auto& c, const auto& v) { c.problem.lambda = parse_real(v); }},
      {"lambda_grid", [](auto& c, const auto& v) { c.problem.lambda_grid = parse_real_list(v); }},
      {"step_size", [](auto& c, const auto& v) { c.problem.step_size = parse_real(v); }},
      {"rounds", [](auto& c, const auto& v) { c.problem.rounds = parse_int(v); }},
      {"local_epochs", [](auto& c, const auto& v) { c.problem.local_epochs = parse_int(v); }},
      {"node_epochs",
       [](auto& c, const auto& v) {
         c.problem.node_epochs.clear();
         for (const auto& item : parse_list(v)) c.problem.node_epochs.push_back(parse_int(item));
       }},
      {"variant",
       [](auto& c, const auto& v) {
         const std::string t = lower(csv::trim(v));
         if (t == "analytic") c.problem.variant = GradientVariant::Analytic;
         else if (t == "paper_literal") c.problem.variant = GradientVariant::PaperLiteral;
         else bad_value("variant must be analytic or paper_literal");
       }},
      {"penalty_scale",
       [](auto& c, const auto& v) {
         const std::string t = lower(csv::trim(v));
         if (t == "lambda_over_m") c.problem.penalty_scale = PenaltyScaleMode::LambdaOverM;
         else if (t == "lambda_over_2m") c.problem.penalty_scale = PenaltyScaleMode::LambdaOverTwoM;
         else bad_value("penalty_scale must be lambda_over_m or lambda_over_2m");
       }},
      {"sign_aligned", [](auto& c, const auto& v) { c.problem.sign_aligned = parse_bool(v); }},
      {"trace_matched", [](auto& c, const auto& v) { c.problem.trace_matched = parse_bool(v); }},
      {"rel_tol", [](auto& c, const auto& v) { c.problem.rel_tol = parse_real(v); }},
      {"patience", [](auto& c, const auto& v) { c.problem.patience = parse_int(v); }},
      {"validation_fraction", [](auto& c, const auto& v) { c.problem.validation_fraction = parse_real(v); }},
      {"identical_init", [](auto& c, const auto& v) { c.problem.identical_init = parse_bool(v); }},
      {"seed", [](auto& c, const auto& v) { c.problem.seed = parse_u64(v); }},

      {"method", [](auto& c, const auto& v) { c.method = lower(csv::trim(v)); }},
      {"data_dir", [](auto& c, const auto& v) { c.data_dir = csv::trim(v); }},
      {"out_dir", [](auto& c, const auto& v) { c.out_dir = csv::trim(v); }},
      {"threads", [](auto& c, const auto& v) { c.threads = parse_int(v); }},
      {"snapshots", [](auto& c, const auto& v) { c.snapshots = parse_bool(v); }},
      {"sweep",
       [](auto& c, const auto& v) {
         const std::string t = lower(csv::trim(v));
         if (t == "none") c.sweep = SweepKind::None;
         else if (t == "theta") c.sweep = SweepKind::Theta;
         else if (t == "n") c.sweep = SweepKind::N;
         else if (t == "m") c.sweep = SweepKind::M;
         else if (t == "dirichlet") c.sweep = SweepKind::Dirichlet;
         else if (t == "noise") c.sweep = SweepKind::Noise;
         else if (t == "flip") c.sweep = SweepKind::Flip;
         else bad_value("sweep must be one of none, theta, n, m, dirichlet, noise, flip");
       }},
      {"sweep_values", [](auto& c, const auto& v) { c.sweep_values = parse_real_list(v); }},
      {"replications", [](auto& c, const auto& v) { c.replications = parse_int(v); }},
      {"methods",
       [](auto& c, const auto& v) {
         c.methods.clear();
         for (const auto& item : parse_list(v)) c.methods.push_back(lower(item));
       }},
      {"compare_separate", [](auto& c, const auto& v) { c.compare_separate = parse_bool(v); }},
      {"host", [](auto& c, const auto& v) { c.host = csv::trim(v); }},
      {"port", [](auto& c, const auto& v) { c.port = parse_int(v); }},
      {"timeout_ms", [](auto& c, const auto& v) { c.timeout_ms = parse_int(v); }},
      {"node_id", [](auto& c, const auto& v) { c.node_id = parse_int(v); }},
      {"check_instances", [](auto& c, const auto& v) { c.check_instances = parse_int(v); }},
      {"init_count", [](auto& c, const auto& v) { c.init_count = parse_int(v); }},
  };
  return table;
}

// factor := number | 'pi' ; expr := ['-'] factor (('*' | '/') factor)*
double parse_expression(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  }
  if (s.empty()) bad_value("empty numeric value");
  std::size_t pos = 0;
  auto factor = [&]() -> double {
    if (s.compare(pos, 2, "pi") == 0) {
      pos += 2;
      return std::numbers::pi;
    }
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin) bad_value("cannot parse number in '" + text + "'");
    pos += static_cast<std::size_t>(end - begin);
    return x;
  };
  double sign = 1.0;
  if (s[0] == '-' && s.compare(1, 2, "pi") == 0) {
    sign = -1.0;
    pos = 1;
  }
  double value = factor();
  while (pos < s.size()) {
    const char op = s[pos++];
    if (op != '*' && op != '/') bad_value("unexpected '" + std::string(1, op) + "' in '" + text + "'");
    const double rhs = factor();
    value = op == '*' ? value * rhs : value / rhs;
  }
  if (!std::isfinite(value)) bad_value("value is not finite: '" + text + "'");
  return sign * value;
}

}  // namespace

double parse_real(const std::string& text) { return parse_expression(text); }

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(csv::trim(key));
  if (it == table.end()) fail(ErrorCode::ConfigError, "unknown key '" + csv::trim(key) + "'");
  it->second(cfg, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (csv::blank(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void ExperimentConfig::validate() const {
  problem.validate();
  auto bad = [](const std::string& what) { fail(ErrorCode::ConfigError, what); };
  if (threads < 1) bad("threads must be at least 1");
  if (replications < 1) bad("replications must be at least 1");
  if (methods.empty()) bad("methods must not be empty");
  for (const auto& m : methods) {
    if (m != "dir" && m != "sls" && m != "pls" && m != "cir" && m != "drd") bad("unknown method '" + m + "'");
  }
  if (method != "dir" && method != "sls" && method != "pls" && method != "cir" && method != "drd") {
    bad("unknown method '" + method + "'");
  }
  if (port < 0 || port > 65535) bad("port must lie in [0, 65535]");
  if (timeout_ms < 1) bad("timeout_ms must be positive");
  if (node_id < 0) bad("node_id must be non-negative");
  if (check_instances < 1) bad("check_instances must be positive");
  if (init_count < 1) bad("init_count must be positive");
  if (sweep != SweepKind::None && sweep_values.empty()) bad("sweep_values must not be empty");
  for (double v : sweep_values) {
    switch (sweep) {
      case SweepKind::Theta:
        if (!(v > 0.0 && v < std::numbers::pi / 2)) bad("theta sweep values must lie in (0, pi/2)");
        break;
      case SweepKind::N:
      case SweepKind::M:
        if (v < 1.0 || v != std::floor(v)) bad("n and m sweep values must be positive integers");
        break;
      case SweepKind::Dirichlet:
        if (!(v > 0.0)) bad("dirichlet sweep values must be positive");
        break;
      case SweepKind::Noise:
      case SweepKind::Flip:
        if (v < 1.0 || v != std::floor(v)) bad("noise and flip levels must be integers >= 1");
        if (sweep == SweepKind::Flip && 0.075 + 0.025 * (v - 1.0) >= 0.5) bad("flip level too large (q must stay < 0.5)");
        break;
      case SweepKind::None:
        break;
    }
  }
}

const char* sweep_name(SweepKind kind) noexcept {
  switch (kind) {
    case SweepKind::None: return "none";
    case SweepKind::Theta: return "theta";
    case SweepKind::N: return "n";
    case SweepKind::M: return "m";
    case SweepKind::Dirichlet: return "dirichlet";
    case SweepKind::Noise: return "noise";
    case SweepKind::Flip: return "flip";
  }
  return "none";
}

ProblemConfig apply_sweep(const ProblemConfig& base, SweepKind kind, double value) {
  ProblemConfig c = base;
  switch (kind) {
    case SweepKind::None:
      break;
    case SweepKind::Theta:
      c.theta_max = value;
      break;
    case SweepKind::N:
      c.node_n = static_cast<int>(value);
      break;
    case SweepKind::M:
      c.m = static_cast<int>(value);
      c.node_epochs.clear();
      break;
    case SweepKind::Dirichlet:
      c.allocation = AllocationKind::Dirichlet;
      c.dirichlet_alpha = value;
      c.node_n = 0;
      break;
    case SweepKind::Noise:
      c.channels = {{0.1, 0.75}, {0.2 + 0.4 * (value - 1.0), 0.125}};
      c.channel_probs = {0.5, 0.5};
      break;
    case SweepKind::Flip:
      c.channels = {{0.1, 0.75}, {0.2, 0.075 + 0.025 * (value - 1.0)}};
      c.channel_probs = {0.5, 0.5};
      break;
  }
  return c;
}

}  // namespace dircs
