#ifndef FRACCAL_H
#define FRACCAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_NULL_POINTER = 1,
  FC_STATUS_INVALID_ARGUMENT = 2,
  FC_STATUS_DIMENSION_MISMATCH = 3,
  FC_STATUS_SOLVER_FAILURE = 4,
  FC_STATUS_PANIC = 5,
} FcStatus;

/**
 * Opaque handle to a forward model with the default regions and exterior
 * datum. Create with [`fc_model_new`], release with [`fc_model_free`].
 */
typedef struct FcModel FcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model on `[-ell, ell]` with `K = 6m` cells and order `s`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum FcStatus fc_model_new(double ell, size_t m, double s, struct FcModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`fc_model_new`] and not be used afterwards.
 */
void fc_model_free(struct FcModel *model);

/**
 * Interior node count `K - 1`, number of `Omega` nodes and number of
 * measurement nodes.
 *
 * # Safety
 * `model` must be a live handle; the out pointers must be valid.
 */
enum FcStatus fc_model_dims(const struct FcModel *model,
                            size_t *interior,
                            size_t *omega,
                            size_t *measurement);

/**
 * Coordinates of the `Omega` nodes, the layout expected for potentials.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FcStatus fc_model_omega_coords(const struct FcModel *model, double *out, size_t len);

/**
 * Solves the Dirichlet problem for the potential `f` on the `Omega` nodes.
 * Writes `u` on `Omega` (`u_len` = omega count) and `(-Δ)^s u` on the
 * measurement nodes (`dn_len` = measurement count).
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths.
 */
enum FcStatus fc_model_solve(const struct FcModel *model,
                             const double *f,
                             size_t f_len,
                             double *u_out,
                             size_t u_len,
                             double *dn_out,
                             size_t dn_len);

/**
 * Copies the Toeplitz symbol `a_0..a_{K-2}` (length `K - 1`).
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FcStatus fc_operator_symbol(const struct FcModel *model, double *out, size_t len);

/**
 * `out = A v` on the interior nodes (both of length `K - 1`).
 *
 * # Safety
 * `v` and `out` must hold `len` doubles and may not overlap.
 */
enum FcStatus fc_operator_apply(const struct FcModel *model,
                                const double *v,
                                double *out,
                                size_t len);

/**
 * `G(f)(x_k)` for `n` points in the admissible measurement set.
 *
 * # Safety
 * `f` holds `f_len` doubles; `xs` and `out` hold `n` doubles.
 */
enum FcStatus fc_eval_g(const struct FcModel *model,
                        const double *f,
                        size_t f_len,
                        const double *xs,
                        double *out,
                        size_t n);

/**
 * `-(1/2σ²) Σ (y_k - G(f)(x_k))²`.
 *
 * # Safety
 * `f` holds `f_len` doubles; `xs` and `ys` hold `n` doubles; `out` is valid.
 */
enum FcStatus fc_log_likelihood(const struct FcModel *model,
                                const double *f,
                                size_t f_len,
                                const double *xs,
                                const double *ys,
                                size_t n,
                                double sigma,
                                double *out);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACCAL_H */
