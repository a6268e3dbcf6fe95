/* C interface to the dircs library.
 *
 * All functions returning int return a dircs error code (DIRCS_OK on
 * success). On failure dircs_last_error() holds a message for the calling
 * thread. Handles are opaque and owned by the caller.
 */
#ifndef DIRCS_H
#define DIRCS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DIRCS_API __declspec(dllexport)
#else
#define DIRCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum dircs_error {
  DIRCS_OK = 0,
  DIRCS_INVALID_ARGUMENT = 1,
  DIRCS_DIMENSION_MISMATCH = 2,
  DIRCS_NON_BINARY_MEASUREMENT = 3,
  DIRCS_LAST_COORDINATE_ZERO = 4,
  DIRCS_DEGENERATE_SIGNAL = 5,
  DIRCS_SIMILARITY_UNSATISFIABLE = 6,
  DIRCS_INFEASIBLE_ALLOCATION = 7,
  DIRCS_TOO_FEW_MEASUREMENTS = 8,
  DIRCS_ZERO_VECTOR = 9,
  DIRCS_DEGENERATE_LIFT = 10,
  DIRCS_DEGENERATE_DENOMINATOR = 11,
  DIRCS_STEP_DIVERGED = 12,
  DIRCS_SINGULAR_GRAM = 13,
  DIRCS_MISMATCHED_NODES = 14,
  DIRCS_PAYLOAD_TOO_LARGE = 15,
  DIRCS_BAD_MAGIC = 16,
  DIRCS_BAD_KIND = 17,
  DIRCS_FRAME_INCOMPLETE = 18,
  DIRCS_NODE_TIMEOUT = 19,
  DIRCS_ROUND_MISMATCH = 20,
  DIRCS_CONFIG_ERROR = 21,
  DIRCS_IO_ERROR = 22,
  DIRCS_TRANSPORT_ERROR = 23,
  DIRCS_INTERNAL_ERROR = 99
};

typedef struct dircs_config dircs_config;
typedef struct dircs_dataset dircs_dataset;
typedef struct dircs_result dircs_result;

/* Errors */
DIRCS_API const char* dircs_last_error(void);
DIRCS_API const char* dircs_error_name(int code);
/* Nonzero when `code` signals bad input or configuration. */
DIRCS_API int dircs_error_is_config(int code);

/* Configuration */
DIRCS_API int dircs_config_default(dircs_config** out);
DIRCS_API int dircs_config_load(const char* path, dircs_config** out);
DIRCS_API int dircs_config_parse(const char* text, dircs_config** out);
/* Same syntax as one `key = value` config line. */
DIRCS_API int dircs_config_set(dircs_config* cfg, const char* key, const char* value);
DIRCS_API int dircs_config_validate(const dircs_config* cfg);
DIRCS_API void dircs_config_free(dircs_config* cfg);

/* Scenarios */
DIRCS_API int dircs_scenario_generate(const dircs_config* cfg, uint64_t rep, dircs_dataset** out);
DIRCS_API int dircs_scenario_load(const char* dir, dircs_dataset** out);
DIRCS_API int dircs_scenario_export(const dircs_dataset* data, const char* dir);
DIRCS_API int dircs_scenario_dims(const dircs_dataset* data, int* m, int* p);
DIRCS_API int dircs_scenario_node_size(const dircs_dataset* data, int node, int* n);
/* Copies node `node`'s ground-truth signal (length p). */
DIRCS_API int dircs_scenario_truth(const dircs_dataset* data, int node, double* beta, size_t len);
DIRCS_API void dircs_scenario_free(dircs_dataset* data);

/* Solvers: method is "dir", "cir", "sls" or "pls". */
DIRCS_API int dircs_run(const dircs_config* cfg, const dircs_dataset* data, const char* method, dircs_result** out);
DIRCS_API int dircs_result_estimate(const dircs_result* res, int node, double* beta, size_t len);
/* Zero for the least-squares baselines. */
DIRCS_API int dircs_result_rounds(const dircs_result* res, int* rounds);
DIRCS_API int dircs_result_comm_cost(const dircs_result* res, uint64_t* scalars);
DIRCS_API int dircs_result_abs_cosine(const dircs_result* res, const dircs_dataset* data, int node, double* value);
DIRCS_API int dircs_result_write_trace(const dircs_result* res, const char* path);
DIRCS_API void dircs_result_free(dircs_result* res);

/* Experiment commands; progress goes to stdout, artifacts to out_dir. */
DIRCS_API int dircs_cmd_gen(const dircs_config* cfg);
DIRCS_API int dircs_cmd_run(const dircs_config* cfg);
DIRCS_API int dircs_cmd_tune(const dircs_config* cfg);
DIRCS_API int dircs_cmd_sweep(const dircs_config* cfg);
DIRCS_API int dircs_cmd_serve(const dircs_config* cfg);
DIRCS_API int dircs_cmd_node(const dircs_config* cfg);
/* *passed is set to 0 when a hard check fails. */
DIRCS_API int dircs_cmd_check(const dircs_config* cfg, int* passed);

#ifdef __cplusplus
}
#endif

#endif
