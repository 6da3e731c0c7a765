/* C interface for the curlsob toolkit. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every API call.
 */
typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_INVALID_ARGUMENT = 1,
  CS_STATUS_IO = 2,
  CS_STATUS_SOLVER = 3,
  CS_STATUS_DEGENERATE = 4,
  CS_STATUS_INTERNAL = 5,
} CsStatus;

/**
 * Opaque vector-field handle.
 */
typedef struct CsField CsField;

/**
 * Gauge-fix summary (scalars only; request the fixed field separately).
 */
typedef struct CsGaugeReport {
  double seminorm;
  double constraint_residual;
  uintptr_t iterations;
  int32_t converged;
} CsGaugeReport;

/**
 * Sobolev-quotient report.
 */
typedef struct CsQuotientReport {
  double curl_norm;
  double seminorm;
  double quotient;
  double multiplier;
  double el_residual;
} CsQuotientReport;

/**
 * Zero-mode residual report for the closed-form pair.
 */
typedef struct CsZeroModeReport {
  double dirac_residual;
  double relative_residual;
  double weighted_relative_residual;
  double b_norm;
  double spinor_quotient;
} CsZeroModeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message into `buf` (NUL-terminated, truncated to
 * `len`). Returns the full message length in bytes, excluding the NUL.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be null (then only
 * the length is returned).
 */
uintptr_t cs_last_error_message(char *buf, uintptr_t len);

/**
 * Release a field handle. Passing null is a no-op.
 *
 * # Safety
 * `field` must be a handle produced by this library and not yet freed.
 */
void cs_field_free(struct CsField *field);

/**
 * Sample the closed-form optimizer candidate for direction `(wx, wy, wz)`.
 *
 * # Safety
 * `out` must be a valid pointer to receive the handle.
 */
enum CsStatus cs_field_loss_yau(uintptr_t n,
                                double box_half_width,
                                double wx,
                                double wy,
                                double wz,
                                struct CsField **out);

/**
 * Read a vector field from a vf3 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum CsStatus cs_field_read_vf3(const char *path, struct CsField **out);

/**
 * Write a vector field to a vf3 file.
 *
 * # Safety
 * `field` must be a live handle; `path` a NUL-terminated string.
 */
enum CsStatus cs_field_write_vf3(const struct CsField *field, const char *path);

/**
 * Grid parameters of a field.
 *
 * # Safety
 * All pointers must be valid; `field` must be a live handle.
 */
enum CsStatus cs_field_grid(const struct CsField *field, uintptr_t *n, double *box_half_width);

/**
 * `L^p` norm of a field (`p >= 1`; pass INFINITY for the sup norm).
 *
 * # Safety
 * `field` must be a live handle; `out` valid.
 */
enum CsStatus cs_field_lp_norm(const struct CsField *field, double p, double *out);

/**
 * Spectral curl of a field.
 *
 * # Safety
 * `field` must be a live handle; `out` valid.
 */
enum CsStatus cs_field_curl(const struct CsField *field, struct CsField **out);

/**
 * Run the nonlinear gauge solve. `out_fixed` may be null when only the
 * report is wanted.
 *
 * # Safety
 * `field` must be a live handle; `report` valid; `out_fixed` valid or null.
 */
enum CsStatus cs_gauge_fix(const struct CsField *field,
                           double tol,
                           uintptr_t max_iter,
                           struct CsGaugeReport *report,
                           struct CsField **out_fixed);

/**
 * Evaluate the Sobolev quotient and Euler-Lagrange residual of a field.
 *
 * # Safety
 * `field` must be a live handle; `report` valid.
 */
enum CsStatus cs_quotient(const struct CsField *field,
                          double tol,
                          uintptr_t max_iter,
                          double eps_reg,
                          struct CsQuotientReport *report);

/**
 * Build the matched closed-form pair for spinor
 * `eta = (re1 + i im1, re2 + i im2)` on an `n`/`box_half_width` grid and
 * measure the zero-mode residual.
 *
 * # Safety
 * `report` must be valid.
 */
enum CsStatus cs_zero_mode_residual(uintptr_t n,
                                    double box_half_width,
                                    double eta_re1,
                                    double eta_im1,
                                    double eta_re2,
                                    double eta_im2,
                                    struct CsZeroModeReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
