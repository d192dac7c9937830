/* Copyright 2026 The nondipole-tdse Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the nondipole-tdse library. All handles are opaque and
 * owned by the caller once returned; free them with the matching *_free.
 * Functions returning ndt_status record a message retrievable with
 * ndt_last_error() on the calling thread.
 */
#ifndef NDTDSE_NDTDSE_H
#define NDTDSE_NDTDSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NDT_API __declspec(dllexport)
#else
#define NDT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ndt_status {
  NDT_OK = 0,
  NDT_ERR_ARGUMENT = 1,
  NDT_ERR_CONFIG = 2,
  NDT_ERR_NUMERICAL = 3,
  NDT_ERR_IO = 4,
  NDT_ERR_INTERNAL = 5
} ndt_status;

typedef struct ndt_config ndt_config;
typedef struct ndt_result ndt_result;

NDT_API const char* ndt_version(void);

/* Message of the last failed call on this thread, "" if none. */
NDT_API const char* ndt_last_error(void);
/* Source position of the last config error, 0 when unknown. */
NDT_API int ndt_last_error_line(void);
NDT_API int ndt_last_error_column(void);

NDT_API ndt_status ndt_config_parse(const char* text, ndt_config** out);
NDT_API ndt_status ndt_config_load(const char* path, ndt_config** out);
NDT_API void ndt_config_free(ndt_config* config);

/* Canonical text of the config; NUL-terminated, valid until the handle is freed. */
NDT_API const char* ndt_config_text(const ndt_config* config);
/* SHA-256 of the canonical text as 64 hex digits. */
NDT_API const char* ndt_config_hash(const ndt_config* config);
/* Number of jobs the config expands to. */
NDT_API ndt_status ndt_config_job_count(const ndt_config* config, size_t* count);
/* Fully resolved text of job `index`. Written to buf (truncated to cap - 1
 * bytes); *needed receives the full length plus one. */
NDT_API ndt_status ndt_config_job_text(const ndt_config* config, size_t index, char* buf,
                                       size_t cap, size_t* needed);

typedef void (*ndt_log_fn)(const char* line, void* user);

typedef struct ndt_run_options {
  const char* out_dir;     /* NULL: the config's outputs.directory */
  int threads;             /* >= 1 */
  const char* resume_path; /* NULL: start from the ground state */
  const char* cache_dir;   /* NULL: $NDT_CACHE_DIR */
  ndt_log_fn log;
  void* log_user;
} ndt_run_options;

NDT_API void ndt_run_options_init(ndt_run_options* options);

/* Runs every job. A result is returned even when jobs fail; inspect
 * ndt_result_status. The call itself fails only when nothing could run. */
NDT_API ndt_status ndt_run(const ndt_config* config, const ndt_run_options* options,
                           ndt_result** out);
/* Recomputes observables from a checkpoint written by a run of this config. */
NDT_API ndt_status ndt_spectrum(const ndt_config* config, const char* checkpoint_path,
                                const ndt_run_options* options, ndt_result** out);
NDT_API void ndt_result_free(ndt_result* result);

/* Worst job status: NDT_OK when every job completed. */
NDT_API ndt_status ndt_result_status(const ndt_result* result);
NDT_API size_t ndt_result_job_count(const ndt_result* result);

typedef struct ndt_job_summary {
  ndt_status status;
  double ionization;
  double bound_population;
  double ground_population;
  double final_norm;
  double absorbed;
  int gauge_boundary_identity;
  int64_t steps;
  int64_t dim;
  double mean_krylov_dim;
  int max_krylov_dim;
  double max_residual;
  double wall_seconds;
} ndt_job_summary;

NDT_API ndt_status ndt_result_job(const ndt_result* result, size_t index, ndt_job_summary* out);
/* Strings valid until the result is freed; NULL for a bad index. */
NDT_API const char* ndt_result_job_name(const ndt_result* result, size_t index);
NDT_API const char* ndt_result_job_error(const ndt_result* result, size_t index);
NDT_API const char* ndt_result_config_hash(const ndt_result* result);

#ifdef __cplusplus
}
#endif

#endif /* NDTDSE_NDTDSE_H */
