// Command-line driver. Talks to the library only through dircs.h.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dircs/dircs.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;
constexpr int kExitCheckFailed = 1;

int report(int code) {
  if (code == DIRCS_OK) return 0;
  std::fprintf(stderr, "error [%s]: %s\n", dircs_error_name(code), dircs_last_error());
  return dircs_error_is_config(code) ? kExitConfig : kExitFailure;
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> method;
  std::optional<std::string> lambda;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<int> node_id;
};

int apply(dircs_config* cfg, const Overrides& o) {
  std::vector<std::pair<const char*, std::string>> kv;
  if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
  if (o.threads) kv.emplace_back("threads", std::to_string(*o.threads));
  if (o.out) kv.emplace_back("out_dir", *o.out);
  if (o.data) kv.emplace_back("data_dir", *o.data);
  if (o.method) kv.emplace_back("method", *o.method);
  if (o.lambda) kv.emplace_back("lambda", *o.lambda);
  if (o.host) kv.emplace_back("host", *o.host);
  if (o.port) kv.emplace_back("port", std::to_string(*o.port));
  if (o.node_id) kv.emplace_back("node_id", std::to_string(*o.node_id));
  for (const auto& [key, value] : kv) {
    if (int rc = dircs_config_set(cfg, key, value.c_str()); rc != DIRCS_OK) return rc;
  }
  return DIRCS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed 1-bit compressive sensing via invex relaxation"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "key = value config file");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--threads", o.threads, "worker threads");
  app.add_option("--out", o.out, "output directory");

  auto* gen = app.add_subcommand("gen", "generate a synthetic scenario and export it as CSV");
  auto* run = app.add_subcommand("run", "run one method and write eval/trace/estimate CSVs");
  run->add_option("--data", o.data, "scenario directory (generated from the config when omitted)");
  run->add_option("--method", o.method, "dir | sls | pls | cir");
  run->add_option("--lambda", o.lambda, "regularization weight");
  auto* tune = app.add_subcommand("tune", "warm-start tuning over lambda_grid");
  tune->add_option("--data", o.data, "scenario directory");
  auto* sweep = app.add_subcommand("sweep", "replicated scenario sweep with aggregate statistics");
  auto* serve = app.add_subcommand("serve", "run the DIR server over TCP");
  serve->add_option("--data", o.data, "scenario directory")->required();
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "listen port (0 picks a free port)");
  auto* node = app.add_subcommand("node", "run one DIR worker over TCP");
  node->add_option("--data", o.data, "scenario directory")->required();
  node->add_option("--host", o.host, "server address");
  node->add_option("--port", o.port, "server port");
  node->add_option("--node-id", o.node_id, "0-based node index")->required();
  auto* check = app.add_subcommand("check", "run the verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  dircs_config* cfg = nullptr;
  int rc = o.config_path.empty() ? dircs_config_default(&cfg) : dircs_config_load(o.config_path.c_str(), &cfg);
  if (rc != DIRCS_OK) return report(rc);
  rc = apply(cfg, o);
  if (rc == DIRCS_OK) rc = dircs_config_validate(cfg);
  if (rc != DIRCS_OK) {
    dircs_config_free(cfg);
    return report(rc);
  }

  int exit_code = 0;
  if (gen->parsed()) {
    rc = dircs_cmd_gen(cfg);
  } else if (run->parsed()) {
    rc = dircs_cmd_run(cfg);
  } else if (tune->parsed()) {
    rc = dircs_cmd_tune(cfg);
  } else if (sweep->parsed()) {
    rc = dircs_cmd_sweep(cfg);
  } else if (serve->parsed()) {
    rc = dircs_cmd_serve(cfg);
  } else if (node->parsed()) {
    rc = dircs_cmd_node(cfg);
  } else if (check->parsed()) {
    int passed = 0;
    rc = dircs_cmd_check(cfg, &passed);
    if (rc == DIRCS_OK && !passed) exit_code = kExitCheckFailed;
  }
  dircs_config_free(cfg);
  return rc == DIRCS_OK ? exit_code : report(rc);
}
