#ifndef WHITTLE_H
#define WHITTLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WhittleStatus {
  WHITTLE_STATUS_OK = 0,
  WHITTLE_STATUS_NULL_POINTER = 1,
  WHITTLE_STATUS_INVALID_ARGUMENT = 2,
  WHITTLE_STATUS_INVALID_MODEL = 3,
  WHITTLE_STATUS_NUMERICAL = 4,
  WHITTLE_STATUS_NOT_CONVERGED = 5,
  WHITTLE_STATUS_PANIC = 6,
} WhittleStatus;

typedef struct WhittleFit WhittleFit;

typedef struct WhittleModel WhittleModel;

typedef struct WhittleObjective WhittleObjective;

typedef struct WhittleSeries WhittleSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *whittle_last_error(void);

/**
 * Library version as a static string.
 */
const char *whittle_version(void);

/**
 * # Safety
 * `s` must come from a whittle call returning an owned string.
 */
void whittle_string_free(char *s);

/**
 * # Safety
 * `values` must point to `n` readable doubles; `out` must be writable.
 */
enum WhittleStatus whittle_series_new_real(const double *values,
                                           size_t n,
                                           double delta,
                                           struct WhittleSeries **out);

/**
 * Complex series from separate real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must each point to `n` readable doubles; `out` must be writable.
 */
enum WhittleStatus whittle_series_new_complex(const double *re,
                                              const double *im,
                                              size_t n,
                                              double delta,
                                              struct WhittleSeries **out);

/**
 * # Safety
 * `series` must be null or a live handle.
 */
size_t whittle_series_len(const struct WhittleSeries *series);

/**
 * Copies the samples into `re` and, for complex series, `im` (which may be
 * null for real series). Both buffers need room for the series length.
 *
 * # Safety
 * `series` must be a live handle and the buffers writable for its length.
 */
enum WhittleStatus whittle_series_values(const struct WhittleSeries *series,
                                         double *re,
                                         double *im);

/**
 * # Safety
 * `series` must be null or a live handle, not used afterwards.
 */
void whittle_series_free(struct WhittleSeries *series);

/**
 * Parses a model from `{"model": ..., "params": {...}}` JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WhittleStatus whittle_model_from_json(const char *json, struct WhittleModel **out);

/**
 * Model as JSON; release with [`whittle_string_free`].
 *
 * # Safety
 * `model` must be null or a live handle.
 */
char *whittle_model_to_json(const struct WhittleModel *model);

/**
 * Autocovariance of a real-valued model at lags `0..n_lags`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable for `n_lags` doubles.
 */
enum WhittleStatus whittle_model_acvs(const struct WhittleModel *model,
                                      size_t n_lags,
                                      double delta,
                                      double *out);

/**
 * # Safety
 * `model` must be null or a live handle, not used afterwards.
 */
void whittle_model_free(struct WhittleModel *model);

/**
 * Draws replicate `replicate` of length `n` under the seeding contract of
 * the simulator.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum WhittleStatus whittle_simulate(const struct WhittleModel *model,
                                    size_t n,
                                    double delta,
                                    uint64_t seed,
                                    uint64_t replicate,
                                    struct WhittleSeries **out);

/**
 * Binds a likelihood to a series.
 *
 * `template` takes the CLI model shorthand or template JSON, `variant` one
 * of `time_exact`, `standard`, `blurred`, `tapered`, `tapered_blurred`.
 * `domain` may be null for the default of the series kind. `mask_max` is the
 * upper frequency fraction in `(0, 1]`.
 *
 * # Safety
 * Strings must be NUL-terminated; `series` a live handle; `out` writable.
 */
enum WhittleStatus whittle_objective_new(const struct WhittleSeries *series,
                                         const char *template_,
                                         const char *variant,
                                         const char *domain,
                                         double mask_max,
                                         bool exclude_zero,
                                         struct WhittleObjective **out);

/**
 * Number of free parameters of the bound template.
 *
 * # Safety
 * `objective` must be null or a live handle.
 */
size_t whittle_objective_n_params(const struct WhittleObjective *objective);

/**
 * Log-likelihood at the free parameter values `theta`.
 *
 * # Safety
 * `objective` must be a live handle, `theta` readable for `len` doubles and
 * `out` writable.
 */
enum WhittleStatus whittle_objective_loglik(const struct WhittleObjective *objective,
                                            const double *theta,
                                            size_t len,
                                            double *out);

/**
 * # Safety
 * `objective` must be null or a live handle, not used afterwards.
 */
void whittle_objective_free(struct WhittleObjective *objective);

/**
 * Maximizes the objective from its default starting point, with
 * standard errors. A fit that stops without converging is still returned
 * through `out`, with status `NotConverged`.
 *
 * # Safety
 * `objective` must be a live handle; `out` must be writable.
 */
enum WhittleStatus whittle_fit(const struct WhittleObjective *objective, struct WhittleFit **out);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t whittle_fit_n_params(const struct WhittleFit *fit);

/**
 * Copies the estimates into `theta` and, when non-null, the standard
 * errors into `std_errors` (NaN where unavailable).
 *
 * # Safety
 * `fit` must be a live handle and the buffers writable for `len` doubles.
 */
enum WhittleStatus whittle_fit_theta(const struct WhittleFit *fit,
                                     double *theta,
                                     double *std_errors,
                                     size_t len);

/**
 * Maximized log-likelihood, or NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double whittle_fit_loglik(const struct WhittleFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
double whittle_fit_aicc(const struct WhittleFit *fit);

/**
 * Full fit report as JSON; release with [`whittle_string_free`].
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
char *whittle_fit_to_json(const struct WhittleFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle, not used afterwards.
 */
void whittle_fit_free(struct WhittleFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WHITTLE_H */
