#ifndef NSAC_LAB_H
#define NSAC_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum NsacStatus {
  Ok = 0,
  NullPointer = 1,
  InvalidArgument = 2,
  DomainError = 3,
  RunFailed = 4,
  IoError = 5,
} NsacStatus;

/**
 * Opaque model-parameter handle.
 */
typedef struct NsacParams NsacParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (query length only).
 */
uintptr_t nsac_last_error(char *buf, uintptr_t cap);

/**
 * Crate version as a static NUL-terminated string.
 */
const char *nsac_version(void);

/**
 * Allocate a parameter handle with the library defaults
 * (epsilon=1, v-bar=1, u-bar=0, p(v)=0.5 v^-2, nu(v)=1/v).
 */
struct NsacParams *nsac_params_new(void);

/**
 * Free a parameter handle; null is ignored.
 *
 * # Safety
 * `params` must have come from `nsac_params_new` and not yet been freed.
 */
void nsac_params_free(struct NsacParams *params);

/**
 * Set a numeric model parameter by key: epsilon, vbar, ubar, pressure_amp,
 * pressure_exp, viscosity_coeff.
 *
 * # Safety
 * `params` must be a live handle; `key` a NUL-terminated string.
 */
enum NsacStatus nsac_params_set(struct NsacParams *params, const char *key, double value);

/**
 * Select the viscosity law: 0 = inverse-volume, 1 = constant.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum NsacStatus nsac_params_set_viscosity_model(struct NsacParams *params, int constant);

/**
 * Sound speed c-bar = sqrt(-p'(v-bar)).
 *
 * # Safety
 * `params` must be a live handle; `out` must point to a writable double.
 */
enum NsacStatus nsac_sound_speed(const struct NsacParams *params, double *out);

/**
 * Pressure value and first two derivatives at v.
 *
 * # Safety
 * `params` must be a live handle; the three outputs must be writable.
 */
enum NsacStatus nsac_pressure_eval(const struct NsacParams *params,
                                   double v,
                                   double *p_out,
                                   double *dp_out,
                                   double *ddp_out);

/**
 * Green symbol of the linearized acoustic pair at (xi, t).
 * `which`: 0 = full system, 1 = modified parabolic.
 * `out` receives 8 doubles: row-major (re, im) pairs of the 2x2 matrix.
 *
 * # Safety
 * `params` must be a live handle; `out` must point to 8 writable doubles.
 */
enum NsacStatus nsac_green_symbol(const struct NsacParams *params,
                                  double xi,
                                  double t,
                                  int which,
                                  double *out);

/**
 * Closed-form parabolic Green function at (x, t); `out` receives the 2x2
 * real matrix row-major.
 *
 * # Safety
 * `params` must be a live handle; `out` must point to 4 writable doubles.
 */
enum NsacStatus nsac_green_tilde_physical(const struct NsacParams *params,
                                          double x,
                                          double t,
                                          double *out);

/**
 * Least-squares rate fit of a positive series.
 * `mode`: 0 = algebraic exponent of (1+t), 1 = exponential rate.
 *
 * # Safety
 * `times` and `values` must point to `len` readable doubles; the outputs
 * must be writable.
 */
enum NsacStatus nsac_fit_rate(const double *times,
                              const double *values,
                              uintptr_t len,
                              int mode,
                              double t0,
                              double t1,
                              double *fitted_out,
                              double *stderr_out);

/**
 * Run a catalog experiment from flat `key=value` configuration text
 * (newline-separated). Writes series files and the manifest under
 * `out_dir`. `passed_out` receives whether every report and check passed.
 *
 * # Safety
 * `config_text` and `out_dir` must be NUL-terminated strings; `passed_out`
 * must be writable or null.
 */
enum NsacStatus nsac_run_experiment(const char *config_text, const char *out_dir, bool *passed_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NSAC_LAB_H */
