#ifndef INTFLUX_H
#define INTFLUX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  INTFLUX_STATUS_OK = 0,
  INTFLUX_STATUS_NULL_POINTER = 1,
  INTFLUX_STATUS_INVALID_INPUT = 2,
  INTFLUX_STATUS_SINGULAR_POINT = 3,
  INTFLUX_STATUS_OUT_OF_DOMAIN = 4,
  INTFLUX_STATUS_NON_FINITE = 5,
  INTFLUX_STATUS_RESOURCE_LIMIT = 6,
  INTFLUX_STATUS_INCOMPATIBLE = 7,
  INTFLUX_STATUS_NO_CONVERGENCE = 8,
  INTFLUX_STATUS_IO = 9,
  INTFLUX_STATUS_FORMAT = 10,
  INTFLUX_STATUS_PANIC = 11,
} IntfluxStatus;

// Opaque vector field.
typedef struct IntfluxField IntfluxField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *intflux_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// NUL-terminated) and returns the full message length. Returns 0 when no
// error is recorded.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t intflux_last_error(char *buf, size_t len);

// Unit monopole at `center[3]`.
//
// # Safety
// `center` must point to 3 doubles and `out` must be writable.
IntfluxStatus intflux_field_monopole(const double *center, IntfluxField **out);

// Dipole from `b` to `a`; `rho <= 0` selects the default width.
//
// # Safety
// `a` and `b` must point to 3 doubles and `out` must be writable.
IntfluxStatus intflux_field_dipole(const double *a,
                                   const double *b,
                                   double rho,
                                   IntfluxField **out);

// Lattice counterexample of level `k` for the constant density.
//
// # Safety
// `out` must be writable.
IntfluxStatus intflux_field_counterexample(uint32_t k, IntfluxField **out);

// Field sampled in an FLD1 file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
IntfluxStatus intflux_field_load(const char *path, IntfluxField **out);

// New field `s * field`; the input handle stays valid.
//
// # Safety
// `field` must be a live handle and `out` must be writable.
IntfluxStatus intflux_field_scaled(const IntfluxField *field, double s, IntfluxField **out);

// # Safety
// `field` must be null or a handle not yet freed.
void intflux_field_free(IntfluxField *field);

// # Safety
// `field` must be a live handle, `point` 3 readable and `out` 3 writable
// doubles.
IntfluxStatus intflux_field_evaluate(const IntfluxField *field, const double *point, double *out);

// Flux through the sphere `|x - center| = radius` at quadrature `order`.
//
// # Safety
// `field` must be a live handle, `center` 3 readable doubles and `out`
// writable.
IntfluxStatus intflux_sphere_flux(const IntfluxField *field,
                                  const double *center,
                                  double radius,
                                  size_t order,
                                  double *out);

// `‖field‖_{L^p}` over the box `[lo, hi]`.
//
// # Safety
// `field` must be a live handle, `lo` and `hi` 3 readable doubles and `out`
// writable.
IntfluxStatus intflux_lp_norm_box(const IntfluxField *field,
                                  double p,
                                  const double *lo,
                                  const double *hi,
                                  double *out);

// JSON report of the level-`k` counterexample for `p = 1, 1.2`.
//
// # Safety
// `out` must be writable; free the string with [`intflux_string_free`].
IntfluxStatus intflux_counterexample_report(uint32_t k, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void intflux_string_free(char *s);

// Slice-metric upper bound between two densities on the periodic `n x n`
// grid (`n * n` values each, x fastest).
//
// # Safety
// `h1` and `h2` must point to `n * n` doubles; `bound` and `gap` must be
// writable.
IntfluxStatus intflux_metric_upper_bound_square(size_t n,
                                                const double *h1,
                                                const double *h2,
                                                double p,
                                                double *bound,
                                                int64_t *gap);

// Minimizes the smoothed `L^p` energy on an `n³` grid over the unit cube
// with `count` charges at `points` (3 doubles each). Writes the objective
// and the final divergence residual.
//
// # Safety
// `points` must hold `3 * count` doubles, `charges` `count` integers;
// `objective` and `residual` must be writable.
IntfluxStatus intflux_minimize(const double *points,
                               const int64_t *charges,
                               size_t count,
                               size_t n,
                               double p,
                               double *objective,
                               double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTFLUX_H */
