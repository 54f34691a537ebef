#ifndef POSTLASSO_H
#define POSTLASSO_H

/* Generated by cbindgen from the postlasso-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_USAGE = 2,
  PL_STATUS_DATA = 3,
  PL_STATUS_NUMERICAL = 4,
  PL_STATUS_BUDGET = 5,
  PL_STATUS_PANIC = 6,
} PlStatus;

typedef enum PlScheme {
  PL_SCHEME_PLAIN = 0,
  PL_SCHEME_TRADITIONAL = 1,
  PL_SCHEME_FITNESS = 2,
} PlScheme;

typedef struct PlLassoFit PlLassoFit;

typedef struct PlPostFit PlPostFit;

typedef struct PlProblem PlProblem;

typedef struct PlPenaltyParams {
  double alpha;
  double c;
  double c_prime;
  size_t mc_draws;
  uint64_t seed;
  size_t max_refits;
} PlPenaltyParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pl_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pl_version(void);

struct PlPenaltyParams pl_penalty_params_default(void);

/**
 * Builds a problem from a row-major `n x p` design and a length-`n` response.
 * Columns are normalized internally.
 *
 * # Safety
 * `x` must point to `n * p` doubles, `y` to `n` doubles, `out` to a writable handle slot.
 */
enum PlStatus pl_problem_new(const double *x,
                             size_t n,
                             size_t p,
                             const double *y,
                             struct PlProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`pl_problem_new`] not yet freed.
 */
void pl_problem_free(struct PlProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle; `n` and `p` writable.
 */
enum PlStatus pl_problem_dims(const struct PlProblem *problem, size_t *n, size_t *p);

/**
 * Monte Carlo estimate of the penalty quantile for the problem's design.
 *
 * # Safety
 * `problem` must be a live handle; `out` writable.
 */
enum PlStatus pl_lambda_quantile(const struct PlProblem *problem,
                                 double alpha,
                                 size_t mc_draws,
                                 uint64_t seed,
                                 double *out);

/**
 * Data-driven penalty with the iterated noise-level estimate.
 *
 * # Safety
 * `problem` and `params` must be valid; `lambda_out` and `sigma_out` writable.
 */
enum PlStatus pl_penalty_calibrate(const struct PlProblem *problem,
                                   const struct PlPenaltyParams *params,
                                   double *lambda_out,
                                   double *sigma_out);

/**
 * # Safety
 * `problem` must be a live handle; `out` a writable handle slot.
 */
enum PlStatus pl_lasso_fit(const struct PlProblem *problem, double lambda, struct PlLassoFit **out);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
void pl_lasso_fit_free(struct PlLassoFit *fit);

/**
 * Coefficients on the scale of the raw design.
 *
 * # Safety
 * `fit` must be a live handle; `out` must hold `len == p` doubles.
 */
enum PlStatus pl_lasso_fit_coefficients(const struct PlLassoFit *fit, double *out, size_t len);

/**
 * `Q(β̂)`, the unpenalized in-sample objective. NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double pl_lasso_fit_objective(const struct PlLassoFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t pl_lasso_fit_n_selected(const struct PlLassoFit *fit);

/**
 * OLS refit after LASSO selection. `param` is `c_tilde` for the traditional
 * scheme and `gamma` for the fitness scheme; NaN selects the default
 * (`c_tilde = 1`, automatic `gamma`). Ignored for the plain scheme.
 *
 * # Safety
 * `problem` and `fit` must be live handles with `fit` computed on `problem`;
 * `out` a writable handle slot.
 */
enum PlStatus pl_post_select(const struct PlProblem *problem,
                             const struct PlLassoFit *fit,
                             enum PlScheme scheme,
                             double param,
                             struct PlPostFit **out);

/**
 * # Safety
 * `post` must be null or a live handle.
 */
void pl_post_fit_free(struct PlPostFit *post);

/**
 * # Safety
 * `post` must be a live handle; `out` must hold `len == p` doubles.
 */
enum PlStatus pl_post_fit_coefficients(const struct PlPostFit *post, double *out, size_t len);

/**
 * # Safety
 * `post` must be null or a live handle.
 */
double pl_post_fit_objective(const struct PlPostFit *post);

/**
 * # Safety
 * `post` must be null or a live handle.
 */
size_t pl_post_fit_n_selected(const struct PlPostFit *post);

/**
 * Number of least-squares solves the scheme performed.
 *
 * # Safety
 * `post` must be null or a live handle.
 */
size_t pl_post_fit_ols_solves(const struct PlPostFit *post);

/**
 * Selection threshold `t` used by the scheme.
 *
 * # Safety
 * `post` must be null or a live handle.
 */
double pl_post_fit_threshold(const struct PlPostFit *post);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSTLASSO_H */
