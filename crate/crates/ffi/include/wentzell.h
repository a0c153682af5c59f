#ifndef WENTZELL_H
#define WENTZELL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WZ_OK 0

#define WZ_ERR_NULL 1

#define WZ_ERR_INVALID 2

#define WZ_ERR_DIVERGENT 3

#define WZ_ERR_HYPOTHESIS 4

#define WZ_ERR_NOT_COERCIVE 5

#define WZ_ERR_FACTORIZATION 6

#define WZ_ERR_UNSUPPORTED 7

#define WZ_ERR_CONFIG 8

#define WZ_ERR_IO 9

// A caller-supplied buffer has the wrong length.
#define WZ_ERR_LENGTH 10

#define WZ_ERR_PANIC 11

#define WZ_FORM_DIVERGENCE 0

#define WZ_FORM_NONDIVERGENCE 1

#define WZ_CLASS_WEAK 0

#define WZ_CLASS_STRONG 1

#define WZ_CLASS_NONDEGENERATE 2

// Assembled mass and energy matrices.
typedef struct WzSystem WzSystem;

// A finished time integration.
typedef struct WzTrajectory WzTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL, or 0
// if the last call succeeded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t wz_last_error(char *buf, size_t len);

// Assembles a power-law problem `a = |x - x0|^k` (`k = 0`: `a ≡ 1`).
//
// # Safety
// `out` must be a valid pointer; on success it receives a new handle.
int32_t wz_system_assemble(int32_t form,
                           double x0,
                           double k,
                           size_t n,
                           double grading,
                           double beta0,
                           double beta1,
                           double gamma0,
                           double gamma1,
                           struct WzSystem **out);

// Assembles the problem described by a JSON config (the CLI format).
//
// # Safety
// `json` must be a NUL-terminated string, `out` a valid pointer.
int32_t wz_system_from_config(const char *json, struct WzSystem **out);

// # Safety
// `sys` must be null or a handle from this library not yet freed.
void wz_system_free(struct WzSystem *sys);

// Number of free dofs, 0 for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
size_t wz_system_size(const struct WzSystem *sys);

// One of `WZ_CLASS_*`, or -1 for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
int32_t wz_system_class(const struct WzSystem *sys);

// Squared norm `uᵀMu` and energy `uᵀKu` of a dof vector.
//
// # Safety
// `u` must hold `len` values; `norm_sq` and `energy` must be valid or null.
int32_t wz_system_norms(const struct WzSystem *sys,
                        const double *u,
                        size_t len,
                        double *norm_sq,
                        double *energy);

// Hermite interpolant of the polynomial `Σ coeffs[i] xⁱ`.
//
// # Safety
// `coeffs` must hold `ncoeffs` values and `u` must hold `len` writable values.
int32_t wz_system_interpolate(const struct WzSystem *sys,
                              const double *coeffs,
                              size_t ncoeffs,
                              double *u,
                              size_t len);

// Solves `(λM + K) u = M f`; the relative residual goes to `residual` if
// non-null.
//
// # Safety
// `f` and `u` must each hold `len` values; `residual` must be valid or null.
int32_t wz_resolvent_solve(const struct WzSystem *sys,
                           double lambda,
                           const double *f,
                           double *u,
                           size_t len,
                           double *residual);

// Integrates the problem of a JSON config (the CLI format).
//
// # Safety
// `json` must be a NUL-terminated string, `out` a valid pointer.
int32_t wz_run_config(const char *json, struct WzTrajectory **out);

// # Safety
// `traj` must be null or a handle from this library not yet freed.
void wz_trajectory_free(struct WzTrajectory *traj);

// Number of stored states (steps + 1), 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t wz_trajectory_len(const struct WzTrajectory *traj);

// Time, squared norm and energy of state `index`. Null outputs are skipped.
//
// # Safety
// `traj` must be a live handle; outputs must be valid or null.
int32_t wz_trajectory_state(const struct WzTrajectory *traj,
                            size_t index,
                            double *t,
                            double *norm_sq,
                            double *energy);

// Dofs of state `index` into `u` (length [`wz_system_size`]).
//
// # Safety
// `traj` must be a live handle and `u` must hold `len` writable values.
int32_t wz_trajectory_dofs(const struct WzTrajectory *traj, size_t index, double *u, size_t len);

// Contraction and energy-bound flags (1 = holds).
//
// # Safety
// `traj` must be a live handle; outputs must be valid or null.
int32_t wz_trajectory_checks(const struct WzTrajectory *traj,
                             int32_t *contraction_ok,
                             int32_t *energy_bound_ok);

// Library version as a static NUL-terminated string.
const char *wz_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WENTZELL_H */
