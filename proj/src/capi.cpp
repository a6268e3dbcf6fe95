#include "dircs/dircs.h"

#include <exception>
#include <iostream>
#include <new>
#include <string>

#include "dircs/datagen.hpp"
#include "dircs/experiment.hpp"

struct dircs_config {
  dircs::ExperimentConfig cfg;
};

struct dircs_dataset {
  std::vector<dircs::NodeDataset> nodes;
};

struct dircs_result {
  dircs::MethodResult result;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DIRCS_OK;
  } catch (const dircs::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DIRCS_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DIRCS_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown exception";
    return DIRCS_INTERNAL_ERROR;
  }
}

void require(const void* ptr, const char* name) {
  if (ptr == nullptr) dircs::fail(dircs::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

void check_node(const dircs_dataset* data, int node) {
  require(data, "dataset");
  if (node < 0 || node >= static_cast<int>(data->nodes.size())) {
    dircs::fail(dircs::ErrorCode::InvalidArgument, "node index " + std::to_string(node) + " out of range");
  }
}

void copy_vector(const dircs::Vector& v, double* out, size_t len) {
  require(out, "output buffer");
  if (len != static_cast<size_t>(v.size())) {
    dircs::fail(dircs::ErrorCode::DimensionMismatch,
                "buffer length " + std::to_string(len) + " != " + std::to_string(v.size()));
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v(k);
}

dircs::ProblemConfig fitted(const dircs::ProblemConfig& base, const dircs_dataset* data) {
  dircs::ProblemConfig pc = base;
  if (static_cast<int>(data->nodes.size()) != pc.m) pc.node_epochs.clear();
  pc.m = static_cast<int>(data->nodes.size());
  pc.p = static_cast<int>(data->nodes.front().p());
  return pc;
}

}  // namespace

extern "C" {

const char* dircs_last_error(void) { return g_last_error.c_str(); }

const char* dircs_error_name(int code) {
  if (code == DIRCS_INTERNAL_ERROR) return "InternalError";
  if (code < 0 || code > DIRCS_TRANSPORT_ERROR) return "Unknown";
  return dircs::error_code_name(static_cast<dircs::ErrorCode>(code));
}

int dircs_error_is_config(int code) {
  if (code < 0 || code > DIRCS_TRANSPORT_ERROR) return 0;
  return dircs::is_config_error(static_cast<dircs::ErrorCode>(code)) ? 1 : 0;
}

int dircs_config_default(dircs_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new dircs_config{};
  });
}

int dircs_config_load(const char* path, dircs_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dircs_config{dircs::load_config(path)};
  });
}

int dircs_config_parse(const char* text, dircs_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new dircs_config{dircs::parse_config(text)};
  });
}

int dircs_config_set(dircs_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    dircs::set_config_value(cfg->cfg, key, value);
  });
}

int dircs_config_validate(const dircs_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

void dircs_config_free(dircs_config* cfg) { delete cfg; }

int dircs_scenario_generate(const dircs_config* cfg, uint64_t rep, dircs_dataset** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    auto sc = dircs::generate_scenario(cfg->cfg.problem, rep);
    *out = new dircs_dataset{std::move(sc.nodes)};
  });
}

int dircs_scenario_load(const char* dir, dircs_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new dircs_dataset{dircs::import_scenario(dir)};
  });
}

int dircs_scenario_export(const dircs_dataset* data, const char* dir) {
  return guarded([&] {
    require(data, "dataset");
    require(dir, "dir");
    dircs::Scenario sc;
    sc.nodes = data->nodes;
    dircs::export_scenario(sc, dir);
  });
}

int dircs_scenario_dims(const dircs_dataset* data, int* m, int* p) {
  return guarded([&] {
    require(data, "dataset");
    require(m, "m");
    require(p, "p");
    *m = static_cast<int>(data->nodes.size());
    *p = data->nodes.empty() ? 0 : static_cast<int>(data->nodes.front().p());
  });
}

int dircs_scenario_node_size(const dircs_dataset* data, int node, int* n) {
  return guarded([&] {
    check_node(data, node);
    require(n, "n");
    *n = static_cast<int>(data->nodes[node].n());
  });
}

int dircs_scenario_truth(const dircs_dataset* data, int node, double* beta, size_t len) {
  return guarded([&] {
    check_node(data, node);
    const auto& truth = data->nodes[node].truth;
    if (!truth) dircs::fail(dircs::ErrorCode::InvalidArgument, "dataset has no ground truth");
    copy_vector(truth->beta, beta, len);
  });
}

void dircs_scenario_free(dircs_dataset* data) { delete data; }

int dircs_run(const dircs_config* cfg, const dircs_dataset* data, const char* method, dircs_result** out) {
  return guarded([&] {
    require(cfg, "config");
    require(data, "dataset");
    require(method, "method");
    require(out, "out");
    if (data->nodes.empty()) dircs::fail(dircs::ErrorCode::InvalidArgument, "dataset has no nodes");
    auto r = dircs::run_method(method, fitted(cfg->cfg.problem, data), data->nodes,
                               {cfg->cfg.threads, cfg->cfg.snapshots});
    *out = new dircs_result{std::move(r)};
  });
}

int dircs_result_estimate(const dircs_result* res, int node, double* beta, size_t len) {
  return guarded([&] {
    require(res, "result");
    if (node < 0 || node >= static_cast<int>(res->result.estimates.size())) {
      dircs::fail(dircs::ErrorCode::InvalidArgument, "node index out of range");
    }
    copy_vector(res->result.estimates[node], beta, len);
  });
}

int dircs_result_rounds(const dircs_result* res, int* rounds) {
  return guarded([&] {
    require(res, "result");
    require(rounds, "rounds");
    *rounds = res->result.trace ? res->result.trace->rounds_executed : 0;
  });
}

int dircs_result_comm_cost(const dircs_result* res, uint64_t* scalars) {
  return guarded([&] {
    require(res, "result");
    require(scalars, "scalars");
    *scalars = res->result.trace ? dircs::comm_cost(*res->result.trace) : 0;
  });
}

int dircs_result_abs_cosine(const dircs_result* res, const dircs_dataset* data, int node, double* value) {
  return guarded([&] {
    require(res, "result");
    check_node(data, node);
    require(value, "value");
    if (res->result.estimates.size() != data->nodes.size()) {
      dircs::fail(dircs::ErrorCode::MismatchedNodes, "result and dataset differ in node count");
    }
    const auto& truth = data->nodes[node].truth;
    if (!truth) dircs::fail(dircs::ErrorCode::InvalidArgument, "dataset has no ground truth");
    *value = dircs::abs_cosine(res->result.estimates[node], truth->beta);
  });
}

int dircs_result_write_trace(const dircs_result* res, const char* path) {
  return guarded([&] {
    require(res, "result");
    require(path, "path");
    if (!res->result.trace) dircs::fail(dircs::ErrorCode::InvalidArgument, "method has no iteration trace");
    dircs::write_trace_csv(*res->result.trace, path);
  });
}

void dircs_result_free(dircs_result* res) { delete res; }

#define DIRCS_CMD(name)                      \
  int dircs_cmd_##name(const dircs_config* cfg) { \
    return guarded([&] {                     \
      require(cfg, "config");                \
      cfg->cfg.validate();                   \
      dircs::cmd_##name(cfg->cfg, std::cout); \
    });                                      \
  }

DIRCS_CMD(gen)
DIRCS_CMD(run)
DIRCS_CMD(tune)
DIRCS_CMD(sweep)
DIRCS_CMD(serve)
DIRCS_CMD(node)

#undef DIRCS_CMD

int dircs_cmd_check(const dircs_config* cfg, int* passed) {
  return guarded([&] {
    require(cfg, "config");
    require(passed, "passed");
    cfg->cfg.validate();
    *passed = dircs::cmd_check(cfg->cfg, std::cout) ? 1 : 0;
  });
}

}  // extern "C"
