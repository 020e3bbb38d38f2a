#ifndef SKROCK_SKROCK_H
#define SKROCK_SKROCK_H

#include <stddef.h>
#include <stdint.h>

#if defined(SKR_BUILDING_LIBRARY)
#define SKR_API __attribute__((visibility("default")))
#else
#define SKR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum skr_status {
  SKR_OK = 0,
  SKR_INVALID_ARGUMENT = 1,
  SKR_POISONED_CHAIN = 2,
  SKR_DIVERGENT = 3,
  SKR_UNREACHABLE = 4,
  SKR_BUDGET_MISMATCH = 5,
  SKR_IO_ERROR = 6,
  SKR_INTERNAL = 7
} skr_status;

typedef enum skr_kernel { SKR_KERNEL_MYULA = 0, SKR_KERNEL_SKROCK = 1 } skr_kernel;

typedef struct skr_model skr_model;
typedef struct skr_trace skr_trace;

typedef struct skr_sampler_config {
  skr_kernel kernel;
  double delta;
  int stages;
  double eta;
  uint64_t seed;
  int64_t n_iterations; /* includes burn-in */
  int64_t burn_in;
  int64_t thinning;
  int store_trace_statistic;
} skr_sampler_config;

/* Message of the last failure on the calling thread ("" if none). */
SKR_API const char* skr_last_error(void);
SKR_API const char* skr_status_name(skr_status status);

/* Defaults: damping 0.05, one stage, thinning 1, statistic stored. */
SKR_API skr_sampler_config skr_default_config(void);

/* Models. Free with skr_model_free. */
SKR_API skr_status skr_model_gaussian(const double* variances, const double* mean, size_t dim, skr_model** out);
SKR_API skr_status skr_model_laplace_1d(double scale, double lambda, skr_model** out);
SKR_API skr_status skr_model_uniform_1d(double lambda, skr_model** out);
/* Builds the posterior named by a JSON config (same schema as the CLI). */
SKR_API skr_status skr_model_from_config(const char* config_json, skr_model** out);
SKR_API void skr_model_free(skr_model* model);

SKR_API size_t skr_model_dimension(const skr_model* model);
SKR_API double skr_model_lipschitz(const skr_model* model);
SKR_API double skr_model_lambda(const skr_model* model);
SKR_API int64_t skr_model_gradient_evals(const skr_model* model);
SKR_API skr_status skr_model_log_gradient(const skr_model* model, const double* x, double* out);
SKR_API skr_status skr_model_log_density(const skr_model* model, const double* x, double* out);
SKR_API skr_status skr_max_stepsize(const skr_model* model, skr_kernel kernel, int stages, double eta, double* out);

/* Chains. x0 may be NULL for the model's default start. */
SKR_API skr_status skr_run_chain(const skr_model* model, const skr_sampler_config* config, const double* x0,
                                 skr_trace** out);
SKR_API void skr_trace_free(skr_trace* trace);
SKR_API size_t skr_trace_rows(const skr_trace* trace);
SKR_API size_t skr_trace_dimension(const skr_trace* trace);
/* Row-major samples, rows x dimension. Valid until the trace is freed. */
SKR_API const double* skr_trace_samples(const skr_trace* trace);
SKR_API const double* skr_trace_statistic(const skr_trace* trace);
SKR_API int64_t skr_trace_gradient_evals(const skr_trace* trace);

/* Chebyshev and stability analysis. method is SKR_KERNEL_MYULA for EM. */
SKR_API skr_status skr_stability(skr_kernel method, int stages, double eta, double z, double* r1, double* r2);
SKR_API skr_status skr_optimal_stage_step(double kappa, double eta, double ell, int* stages, double* delta);
SKR_API skr_status skr_w2(const double* variances, size_t dim, skr_kernel method, int stages, double eta,
                          double delta, const double* x0, int64_t n, double* out);
SKR_API skr_status skr_gradient_budget(const double* variances, size_t dim, skr_kernel method, double epsilon,
                                       const double* x0, double eta, int64_t* evals, int* stages, double* delta);

/* Diagnostics on a scalar series. skr_acf writes max_lag + 1 values. */
SKR_API skr_status skr_ess(const double* series, size_t n, double* out);
SKR_API skr_status skr_acf(const double* series, size_t n, size_t max_lag, double* out);

/* File-level commands. manifest_out receives the written manifest path and
   may be NULL; capacity counts the terminating NUL. */
SKR_API skr_status skr_cmd_sample(const char* config_path, char* manifest_out, size_t capacity);
SKR_API skr_status skr_cmd_analyze(const char* manifest_path, char* manifest_out, size_t capacity);
SKR_API skr_status skr_cmd_w2curves(const char* config_path, char* manifest_out, size_t capacity);
SKR_API skr_status skr_cmd_stability(int stages, double eta, double p_min, double p_max, double q2_max,
                                     int resolution, const char* output_dir, char* manifest_out, size_t capacity);

#ifdef __cplusplus
}
#endif

#endif
