#ifndef FCHLAB_H
#define FCHLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Equation form selector.
typedef enum FchForm {
  FCH_FORM_DIRECT11 = 0,
  FCH_FORM_NONLOCAL31 = 1,
  FCH_FORM_SIMPLIFIED32 = 2,
} FchForm;

// Result codes.
typedef enum FchStatus {
  FCH_STATUS_OK = 0,
  FCH_STATUS_NULL_POINTER = 1,
  FCH_STATUS_INVALID_ARGUMENT = 2,
  FCH_STATUS_GRID_MISMATCH = 3,
  FCH_STATUS_IO = 4,
  FCH_STATUS_FORMAT = 5,
  // Blow-up, iteration failure or non-finite values.
  FCH_STATUS_NUMERICAL = 6,
  // No decay fit: too few modes above the floor.
  FCH_STATUS_NO_FIT = 7,
  FCH_STATUS_BUFFER_TOO_SMALL = 8,
  FCH_STATUS_PANIC = 9,
} FchStatus;

// Opaque periodic field.
typedef struct FchField FchField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a
// success. Valid until the next call on the same thread.
const char *fch_last_error(void);

// Library version as a static string.
const char *fch_version(void);

// Field from `n` samples at `x_j = jL/n`.
//
// # Safety
// `samples` must point to `n` readable doubles; `out` to writable storage.
enum FchStatus fch_field_from_samples(double length,
                                      uintptr_t n,
                                      const double *samples,
                                      struct FchField **out);

// Field from a named profile (`cosine:amp,k`, `gaussian:amp,width`,
// `sech:amp,width` or a snapshot path).
//
// # Safety
// `spec` must be a nul-terminated string; `out` writable.
enum FchStatus fch_field_from_profile(const char *spec,
                                      double length,
                                      uintptr_t n,
                                      struct FchField **out);

// Reads an `FCH1` snapshot. `t` and `nu` may be null.
//
// # Safety
// `path` nul-terminated; `out` writable; `t`, `nu` writable or null.
enum FchStatus fch_field_read_snapshot(const char *path,
                                       struct FchField **out,
                                       double *t,
                                       double *nu);

// Writes an `FCH1` snapshot.
//
// # Safety
// `field` a live handle; `path` nul-terminated.
enum FchStatus fch_field_write_snapshot(const struct FchField *field,
                                        const char *path,
                                        double t,
                                        double nu);

// Releases a handle; null is ignored.
//
// # Safety
// `field` must come from this library and not be used afterwards.
void fch_field_free(struct FchField *field);

// Number of grid points, or 0 for null.
//
// # Safety
// `field` a live handle or null.
uintptr_t fch_field_len(const struct FchField *field);

// Period length, or NaN for null.
//
// # Safety
// `field` a live handle or null.
double fch_field_period(const struct FchField *field);

// Copies grid samples into `buf` of capacity `len`.
//
// # Safety
// `field` a live handle; `buf` writable for `len` doubles.
enum FchStatus fch_field_samples(const struct FchField *field, double *buf, uintptr_t len);

// `‖u‖_{B^s_{p,r}}` with `p ∈ {2, ∞}`, `r ∈ {1, 2, ∞}` (pass `INFINITY`).
//
// # Safety
// `field` a live handle; `out` writable.
enum FchStatus fch_besov_norm(const struct FchField *field,
                              double s,
                              double p,
                              double r,
                              double *out);

// Truncated `E_s` norm with its maximizing order and convergence flag.
//
// # Safety
// `field` a live handle; outputs writable (`argmax`, `converged` may be null).
enum FchStatus fch_es_norm(const struct FchField *field,
                           double s,
                           uintptr_t kmax,
                           double nu,
                           double *value,
                           uintptr_t *argmax,
                           bool *converged);

// Fourier-decay fit; `sigma` is NaN when the fit quality is too poor.
//
// # Safety
// `field` a live handle; outputs writable.
enum FchStatus fch_decay_fit(const struct FchField *field,
                             double floor,
                             double *amplitude,
                             double *sigma,
                             double *residual);

// `[f, Λ^{2ν}]g` as a new handle.
//
// # Safety
// `f`, `g` live handles; `out` writable.
enum FchStatus fch_commutator(const struct FchField *f,
                              const struct FchField *g,
                              double nu,
                              struct FchField **out);

// Time derivative `u_t` in the chosen form.
//
// # Safety
// `field` a live handle; `out` writable.
enum FchStatus fch_rhs(const struct FchField *field,
                       double nu,
                       enum FchForm form,
                       struct FchField **out);

// Lifespan `min(1/C, 1/(8C‖u₀‖_{B^{s₀}_{2,1}}))`.
//
// # Safety
// `field` a live handle; `out` writable.
enum FchStatus fch_lifespan(const struct FchField *field, double c_hat, double nu, double *out);

// Integrates to `t_end` with RK4 (step capped by the CFL bound) and
// returns the final field and time. Blow-up reports `Numerical`.
//
// # Safety
// `field` a live handle; `out` writable; `t_final` writable or null.
enum FchStatus fch_integrate(const struct FchField *field,
                             double nu,
                             enum FchForm form,
                             double dt,
                             double t_end,
                             struct FchField **out,
                             double *t_final);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCHLAB_H */
