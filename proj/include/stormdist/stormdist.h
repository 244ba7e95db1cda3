/* SPDX-License-Identifier: Apache-2.0 */
#ifndef STORMDIST_STORMDIST_H
#define STORMDIST_STORMDIST_H

/*
 * C interface to the stormdist simulator: momentum-based variance-reduced
 * distributed optimizers (adaptive and non-adaptive) running on a
 * deterministic in-process worker/server cluster.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_destroy function. Every fallible call returns an sd_status;
 * on failure sd_last_error() describes the problem for the calling thread.
 * Status values double as CLI exit codes.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(STORMDIST_BUILDING)
#    define STORMDIST_API __declspec(dllexport)
#  else
#    define STORMDIST_API __declspec(dllimport)
#  endif
#else
#  define STORMDIST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sd_status {
  SD_OK = 0,
  SD_ERR_INTERNAL = 1,
  SD_ERR_CONFIG_KEY = 2,      /* unknown or missing config key */
  SD_ERR_VALIDATION = 3,      /* a parameter violates a validation rule */
  SD_ERR_ABORTED = 4,         /* a run diverged or produced a non-finite iterate */
  SD_ERR_IO = 5,
  SD_ERR_PROTOCOL = 6,        /* worker/server lockstep broken */
  SD_ERR_INVALID_ARGUMENT = 7 /* null handle, bad length, out-of-range index */
} sd_status;

typedef enum sd_algorithm { SD_ADSTORM = 0, SD_DSTORM = 1, SD_DSGD = 2 } sd_algorithm;

typedef struct sd_problem sd_problem;
typedef struct sd_config sd_config;
typedef struct sd_run sd_run;

typedef struct sd_constants {
  double smoothness;     /* L */
  double sigma_sq;       /* variance bound */
  double gradient_bound; /* G, valid inside region_radius */
  double region_radius;
  double f_star;
  int has_f_star;
} sd_constants;

typedef struct sd_estimates {
  double sigma_sq_hat;
  double gradient_bound_hat;
  double smoothness_hat;
} sd_estimates;

typedef struct sd_grad_check {
  size_t points;
  double worst_fd_error;
  double grad_norm_at_minimizer;
  int has_minimizer;
} sd_grad_check;

typedef struct sd_metrics_record {
  uint64_t t;
  double eta;
  double a;
  double grad_norm;
  double f_val;
  double err_norm;
  double potential;
  uint64_t ifo_per_worker;
  uint64_t bytes_up;
  uint64_t bytes_down;
  int clamped;
  int out_of_region;
} sd_metrics_record;

STORMDIST_API const char* sd_version(void);
/* Message for the last failed call on this thread; "" if none. */
STORMDIST_API const char* sd_last_error(void);

/* ---- problems ---------------------------------------------------------- */

/* Parses a problem object: {"family", "d", "k", "centers", "sigma", "lambda",
 * "region_radius", "seed", "homogeneous", "x_init"}. */
STORMDIST_API sd_status sd_problem_create(const char* json, sd_problem** out);
STORMDIST_API void sd_problem_destroy(sd_problem* problem);
STORMDIST_API size_t sd_problem_dimension(const sd_problem* problem);
STORMDIST_API size_t sd_problem_workers(const sd_problem* problem);
STORMDIST_API sd_status sd_problem_constants(const sd_problem* problem, sd_constants* out);
STORMDIST_API sd_status sd_problem_value(const sd_problem* problem, const double* x, size_t n,
                                         double* out);
STORMDIST_API sd_status sd_problem_gradient(const sd_problem* problem, const double* x, size_t n,
                                            double* out);
/* Stochastic gradient of worker `worker` at x for sample (seed, worker, draw_index). */
STORMDIST_API sd_status sd_problem_stoch_gradient(const sd_problem* problem, uint32_t worker,
                                                  uint64_t seed, uint64_t draw_index,
                                                  const double* x, size_t n, double* out);
STORMDIST_API sd_status sd_problem_fd_check(const sd_problem* problem, const double* x, size_t n,
                                            double h, double* max_rel_error);
STORMDIST_API sd_status sd_problem_check_grad(const sd_problem* problem, size_t points,
                                              uint64_t seed, sd_grad_check* out);
STORMDIST_API sd_status sd_problem_estimate(const sd_problem* problem, size_t samples,
                                            size_t points, uint64_t seed, sd_estimates* out);

/* ---- run configs -------------------------------------------------------- */

STORMDIST_API sd_status sd_config_load_file(const char* path, sd_config** out);
STORMDIST_API sd_status sd_config_load_string(const char* json, sd_config** out);
STORMDIST_API void sd_config_destroy(sd_config* config);
STORMDIST_API sd_status sd_config_set_output_dir(sd_config* config, const char* dir);
STORMDIST_API sd_status sd_config_set_workers(sd_config* config, const uint32_t* ks, size_t n);
/* Replaces the seed list by first_seed, first_seed + 1, ..., first_seed + n - 1
 * where first_seed is the config's first seed. */
STORMDIST_API sd_status sd_config_set_seed_count(sd_config* config, size_t n);
STORMDIST_API size_t sd_config_cell_count(const sd_config* config);

/* Executes every (algo, K, T, seed) cell, writing <run_id>.csv and
 * <run_id>.json to the output directory. threads == 0 reads
 * STORMDIST_THREADS (default 1). trace_path may be NULL. */
STORMDIST_API sd_status sd_execute_run(const sd_config* config, unsigned threads,
                                       const char* trace_path);
/* As sd_execute_run, then writes summary.csv, summary.json and speedup tables. */
STORMDIST_API sd_status sd_execute_sweep(const sd_config* config, unsigned threads);

/* ---- in-process runs ---------------------------------------------------- */

STORMDIST_API sd_status sd_run_create(const sd_config* config, sd_algorithm algo, uint32_t workers,
                                      uint64_t rounds, uint64_t seed, unsigned threads,
                                      sd_run** out);
STORMDIST_API void sd_run_destroy(sd_run* run);
STORMDIST_API size_t sd_run_record_count(const sd_run* run);
STORMDIST_API sd_status sd_run_record(const sd_run* run, size_t index, sd_metrics_record* out);
STORMDIST_API sd_status sd_run_output_point(const sd_run* run, double* out, size_t n,
                                            uint64_t* iterate_index);
/* Non-zero when the run stopped early (divergence or non-finite iterate). */
STORMDIST_API int sd_run_aborted(const sd_run* run);

#ifdef __cplusplus
}
#endif

#endif /* STORMDIST_STORMDIST_H */
