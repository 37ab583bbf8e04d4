/* perfmap - per-instance algorithm configuration via learned performance
 * maps.
 *
 * C API of the shared library. All functions return pm_status; on any
 * failure pm_last_error() describes what went wrong (the message is
 * thread-local and valid until the next failing call on that thread).
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function; passing NULL to a *_free is a no-op.
 */

#ifndef PERFMAP_PERFMAP_H
#define PERFMAP_PERFMAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define PM_API __declspec(dllexport)
#else
#define PM_API __attribute__((visibility("default")))
#endif

typedef enum pm_status {
  PM_OK = 0,
  PM_ERR_USAGE = 2,   /* bad arguments or run config */
  PM_ERR_DATA = 3,    /* parse, schema or validation failure */
  PM_ERR_SOLVER = 4,  /* non-convergence, empty space, budget exceeded */
  PM_ERR_ADAPTER = 5, /* external runs failed */
  PM_ERR_IO = 6       /* filesystem */
} pm_status;

PM_API const char* pm_version(void);
PM_API const char* pm_last_error(void);

/* ------------------------------------------------------------------ */
/* configuration spaces                                               */

typedef struct pm_space pm_space;

PM_API pm_status pm_space_load(const char* path, pm_space** out);
PM_API pm_status pm_space_parse(const char* json_text, pm_space** out);
PM_API void pm_space_free(pm_space* space);

PM_API size_t pm_space_encoding_length(const pm_space* space);
PM_API size_t pm_space_parameter_count(const pm_space* space);

/* One-hot encoding of a full assignment given as parallel name/value
 * arrays. enc_out must hold pm_space_encoding_length bytes (0/1). */
PM_API pm_status pm_space_encode(const pm_space* space, const char* const* names,
                                 const char* const* values, size_t n, uint8_t* enc_out);

/* Inverse of encode. Writes borrowed pointers (owned by the space) for the
 * parameter names and chosen value labels, in declaration order; both
 * arrays must hold pm_space_parameter_count entries. */
PM_API pm_status pm_space_decode(const pm_space* space, const uint8_t* encoding, size_t len,
                                 const char** names_out, const char** values_out);

/* 1 if feasible, 0 if not, negative pm_status on error. */
PM_API int pm_space_is_feasible(const pm_space* space, const uint8_t* encoding, size_t len);

/* Number of feasible configurations, or -1 if it exceeds the budget. */
PM_API long long pm_space_count_feasible(const pm_space* space, unsigned long long budget);

/* ------------------------------------------------------------------ */
/* models                                                             */

typedef struct pm_model pm_model;

PM_API pm_status pm_model_load(const char* path, pm_model** out);
PM_API pm_status pm_model_save(const pm_model* model, const char* path);
PM_API void pm_model_free(pm_model* model);

PM_API size_t pm_model_input_dim(const pm_model* model);
PM_API size_t pm_model_support_count(const pm_model* model);

/* Kernel expansion at a prepared input (feature block already standardized,
 * config bits raw 0/1). */
PM_API pm_status pm_model_predict(const pm_model* model, const double* x, size_t dim, double* out);

/* ------------------------------------------------------------------ */
/* configuration search                                               */

typedef struct pm_problem pm_problem;
typedef struct pm_solution pm_solution;

/* Freezes the query features (prepared-space, length = model feature dim)
 * into a search problem over the space. The problem keeps copies; space and
 * model may be freed afterwards. */
PM_API pm_status pm_problem_build(const pm_model* model, const pm_space* space,
                                  const double* query_features, size_t dim, pm_problem** out);
PM_API void pm_problem_free(pm_problem* problem);

/* Objective of one encoding under the problem. */
PM_API pm_status pm_problem_objective(const pm_problem* problem, const uint8_t* encoding, size_t len,
                                      double* out);

PM_API pm_status pm_solve_enumerate(const pm_problem* problem, unsigned long long budget,
                                    pm_solution** out);
PM_API pm_status pm_solve_bnb(const pm_problem* problem, double time_limit_s, pm_solution** out);
PM_API pm_status pm_solve_local(const pm_problem* problem, size_t restarts, uint64_t seed,
                                double time_limit_s, pm_solution** out);
PM_API void pm_solution_free(pm_solution* solution);

PM_API double pm_solution_objective(const pm_solution* solution);
/* "global_optimal", "local" or "time_limit" (static string). */
PM_API const char* pm_solution_status(const pm_solution* solution);
PM_API uint64_t pm_solution_nodes(const pm_solution* solution);
PM_API double pm_solution_elapsed_s(const pm_solution* solution);
PM_API pm_status pm_solution_encoding(const pm_solution* solution, uint8_t* enc_out, size_t len);
/* Borrowed pointers, valid while the solution lives. */
PM_API pm_status pm_solution_assignment(const pm_solution* solution, size_t index, const char** name_out,
                                        const char** value_out);
PM_API size_t pm_solution_assignment_count(const pm_solution* solution);

/* ------------------------------------------------------------------ */
/* pipeline commands                                                  */

/* Each runs one batch command from a run-config JSON document (the file
 * contents, not a path). The CLI is a thin wrapper over these. Returned
 * status codes double as its exit codes. *summary_out, when non-NULL,
 * receives a malloc'd one-line summary to free with pm_string_free. */
PM_API pm_status pm_run_collect(const char* config_json, char** summary_out);
PM_API pm_status pm_run_prepare(const char* config_json, char** summary_out);
PM_API pm_status pm_run_train(const char* config_json, char** summary_out);
PM_API pm_status pm_run_configure(const char* config_json, const char* instance_features_path,
                                  char** solution_text_out, char** summary_out);
PM_API pm_status pm_run_evaluate(const char* config_json, char** summary_out);
PM_API pm_status pm_run_synth(const char* config_json, char** summary_out);

PM_API void pm_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PERFMAP_PERFMAP_H */
