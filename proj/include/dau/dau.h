/* C interface to the dau library. All functions return a dau_status; on
 * failure dau_last_error() describes the most recent error on the calling
 * thread. Handles are opaque and owned by the caller. */
#ifndef DAU_DAU_H
#define DAU_DAU_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DAU_BUILDING_LIBRARY)
#    define DAU_API __declspec(dllexport)
#  else
#    define DAU_API __declspec(dllimport)
#  endif
#else
#  define DAU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dau_status {
  DAU_OK = 0,
  DAU_ERR_INVALID_ARGUMENT = 1,
  DAU_ERR_IO = 2,
  DAU_ERR_NUMERIC = 3,
  DAU_ERR_CONTRACT = 4,
  DAU_ERR_BUFFER_TOO_SMALL = 5,
  DAU_ERR_INTERNAL = 6
} dau_status;

typedef struct dau_config dau_config;
typedef struct dau_report dau_report;
typedef struct dau_env dau_env;

DAU_API const char* dau_version(void);
DAU_API const char* dau_last_error(void);

/* Experiment configuration: flat string keys and values. */
DAU_API dau_status dau_config_create(dau_config** out);
DAU_API void dau_config_destroy(dau_config* cfg);
DAU_API dau_status dau_config_set(dau_config* cfg, const char* key, const char* value);
DAU_API dau_status dau_config_load_file(dau_config* cfg, const char* path);
/* Copies the value into buf (NUL-terminated). *needed receives the length
 * including the terminator when not NULL. */
DAU_API dau_status dau_config_get(const dau_config* cfg, const char* key, char* buf, size_t len,
                                  size_t* needed);

/* Runs one training job into the configured output directory. final_return
 * receives the last evaluation's mean scaled return (NaN after divergence). */
DAU_API dau_status dau_train(const dau_config* cfg, double* final_return, int* diverged);
/* Runs the (dt, seed) cross product; failed_cells receives the number of
 * cells that raised an error. */
DAU_API dau_status dau_sweep(const dau_config* base, const double* dts, size_t n_dts,
                             const uint64_t* seeds, size_t n_seeds, size_t* failed_cells);

/* Theory checks. */
DAU_API size_t dau_theory_count(void);
DAU_API const char* dau_theory_name(size_t index);
DAU_API dau_status dau_theory_run(const char* name, uint64_t seed, dau_report** out);
DAU_API void dau_report_destroy(dau_report* report);
DAU_API int dau_report_passed(const dau_report* report);
DAU_API const char* dau_report_json(const dau_report* report);

/* Phase-space grid of a pendulum checkpoint written as CSV. */
DAU_API dau_status dau_grid_export(const char* checkpoint_path, const char* out_csv,
                                   size_t resolution);

/* Direct environment stepping. Actions are a single index for discrete
 * environments, encoded as a double. */
DAU_API dau_status dau_env_create(const char* name, double dt, double gamma, uint64_t seed,
                                  dau_env** out);
DAU_API void dau_env_destroy(dau_env* env);
DAU_API size_t dau_env_state_dim(const dau_env* env);
DAU_API size_t dau_env_action_dim(const dau_env* env);
DAU_API int dau_env_is_discrete(const dau_env* env);
DAU_API dau_status dau_env_reset(dau_env* env, double* state_out);
DAU_API dau_status dau_env_step(dau_env* env, const double* action, double* state_out,
                                double* reward, int* done);

#ifdef __cplusplus
}
#endif

#endif
