#ifndef JUMPHEDGE_H
#define JUMPHEDGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum JhStatus {
  JH_OK = 0,
  JH_NULL_POINTER = 1,
  JH_INVALID_PARAMETER = 2,
  JH_ASYMMETRIC_LAW = 3,
  JH_INFINITE_MOMENT = 4,
  // Step caps, search boxes, quadrature tolerance, fit degeneracy.
  JH_NUMERICAL_BUDGET = 5,
  JH_CONFIG = 6,
  JH_IO = 7,
  JH_INTERNAL = 8,
  JH_PANIC = 9,
} JhStatus;

// A validated experiment configuration.
typedef struct JhExperiment JhExperiment;

// A strictly stable law.
typedef struct JhStableLaw JhStableLaw;

// Minimizer of the pointwise barrier problem.
typedef struct JhOptimalBarriers {
  double lower;
  double upper;
  double center;
  double theta;
  double objective;
} JhOptimalBarriers;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next call on the same thread.
const char *jh_last_error_message(void);

// Library version as a static string.
const char *jh_version(void);

// Law with Lévy density `(c₊ 1{x>0} + c₋ 1{x<0}) |x|^{-1-α}`.
//
// # Safety
// `out` must be valid for writes.
enum JhStatus jh_stable_law_new(double alpha,
                                double c_plus,
                                double c_minus,
                                struct JhStableLaw **out);

// Symmetric law with scale `σ`.
//
// # Safety
// `out` must be valid for writes.
enum JhStatus jh_stable_law_symmetric(double alpha, double sigma, struct JhStableLaw **out);

// # Safety
// `law` must be NULL or a handle from `jh_stable_law_*` not yet freed.
void jh_stable_law_free(struct JhStableLaw *law);

// # Safety
// `law` must be a live handle and `out` valid for writes.
enum JhStatus jh_stable_law_sigma(const struct JhStableLaw *law, double *out);

// Expected exit time from `(-lower, upper)`.
//
// # Safety
// `law` must be a live handle and `out` valid for writes.
enum JhStatus jh_mean_exit_time(const struct JhStableLaw *law,
                                double lower,
                                double upper,
                                double *out);

// `E[∫_0^τ X_t² dt]` for the exit time `τ` of `(-lower, upper)`.
//
// # Safety
// `law` must be a live handle and `out` valid for writes.
enum JhStatus jh_mean_squared_integral(const struct JhStableLaw *law,
                                       double lower,
                                       double upper,
                                       double *out);

// `E[|X_τ|^β]`.
//
// # Safety
// `law` must be a live handle and `out` valid for writes.
enum JhStatus jh_overshoot_moment(const struct JhStableLaw *law,
                                  double lower,
                                  double upper,
                                  double beta,
                                  double *out);

// Barriers minimizing `A f/g + c λ u^β/g`.
//
// # Safety
// `law` must be a live handle and `out` valid for writes.
enum JhStatus jh_minimize_lagrangian(const struct JhStableLaw *law,
                                     double a_coef,
                                     double lambda,
                                     double multiplier,
                                     double beta,
                                     struct JhOptimalBarriers *out);

// `c (λ/A)^{1/(2+α-β)}`.
//
// # Safety
// `out` must be valid for writes.
enum JhStatus jh_symmetric_power_barrier(double a_coef,
                                         double lambda,
                                         double alpha,
                                         double beta,
                                         double c,
                                         double *out);

// Rescales optimal barriers from multiplier `c_old` to `c_new`.
//
// # Safety
// `out_lower` and `out_upper` must be valid for writes.
enum JhStatus jh_budget_rescale(double lower,
                                double upper,
                                double c_old,
                                double c_new,
                                double alpha,
                                double beta,
                                double *out_lower,
                                double *out_upper);

// Parses and validates a JSON experiment config.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum JhStatus jh_experiment_from_json(const char *json, struct JhExperiment **out);

// # Safety
// `exp` must be NULL or a handle from `jh_experiment_from_json` not yet freed.
void jh_experiment_free(struct JhExperiment *exp);

// Number of paths per estimate.
//
// # Safety
// `exp` must be a live handle and `out` valid for writes.
enum JhStatus jh_experiment_n_paths(const struct JhExperiment *exp, uint64_t *out);

// Runs the experiment and writes its result files into `out_dir`.
// `threads = 0` uses every core; output does not depend on it.
//
// # Safety
// `exp` must be a live handle and `out_dir` a NUL-terminated string.
enum JhStatus jh_experiment_run(const struct JhExperiment *exp,
                                const char *out_dir,
                                uint32_t threads);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JUMPHEDGE_H */
