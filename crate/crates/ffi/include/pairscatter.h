#ifndef PAIRSCATTER_H
#define PAIRSCATTER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_PARAMETER = 2,
  /**
   * The lattice fails the resolution or extent checks.
   */
  PS_STATUS_GRID_REJECTED = 3,
  /**
   * Amplitudes on different lattices or in the wrong representation.
   */
  PS_STATUS_MISMATCH = 4,
  /**
   * The quantity is undefined for these inputs (vacuum, δ = 0, ...).
   */
  PS_STATUS_UNDEFINED = 5,
  PS_STATUS_NUMERICAL = 6,
  PS_STATUS_IO = 7,
  PS_STATUS_FORMAT = 8,
  PS_STATUS_BUFFER_TOO_SMALL = 9,
  /**
   * The handle was created without the requested data.
   */
  PS_STATUS_UNAVAILABLE = 10,
  PS_STATUS_PANIC = 11,
} PsStatus;

/**
 * Opaque two-particle amplitude.
 */
typedef struct PsAmplitude PsAmplitude;

/**
 * Opaque momentum lattice.
 */
typedef struct PsGrid PsGrid;

/**
 * Opaque Schmidt spectrum, optionally with its modes.
 */
typedef struct PsSpectrum PsSpectrum;

/**
 * Physical parameters, field for field as in the core library.
 */
typedef struct PsModelParams {
  double k_c;
  double sigma;
  double delta;
  double gamma_rate;
  double em_over_hbar;
  double detuning;
  double t;
} PsModelParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `ps_*` call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Static, human-readable name of a status code.
 */
const char *ps_status_string(enum PsStatus status);

/**
 * Fills `out` with the default parameter set.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum PsStatus ps_params_default(struct PsModelParams *out);

/**
 * Validates a parameter set.
 *
 * # Safety
 * `params` must be null or point to a valid struct.
 */
enum PsStatus ps_params_validate(const struct PsModelParams *params);

/**
 * Builds a lattice of `n_points` momenta on `[-extent, extent)`. The
 * resolution and extent checks against `params` can be skipped with
 * `allow_under_resolved`.
 *
 * # Safety
 * `params` must be valid; `out` must be valid for writes.
 */
enum PsStatus ps_grid_new(const struct PsModelParams *params,
                          size_t n_points,
                          double extent,
                          bool allow_under_resolved,
                          struct PsGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from `ps_grid_new` not yet freed.
 */
void ps_grid_free(struct PsGrid *grid);

/**
 * Number of points per axis, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t ps_grid_n_points(const struct PsGrid *grid);

/**
 * Momentum spacing, or NaN for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
double ps_grid_spacing(const struct PsGrid *grid);

/**
 * Normalized pairwise-scattering steady state.
 *
 * # Safety
 * `params` and `grid` must be valid; `out` must be valid for writes.
 */
enum PsStatus ps_steady_pairwise(const struct PsModelParams *params,
                                 const struct PsGrid *grid,
                                 struct PsAmplitude **out);

/**
 * Normalized Bell-like steady state.
 *
 * # Safety
 * As for [`ps_steady_pairwise`].
 */
enum PsStatus ps_steady_bell(const struct PsModelParams *params,
                             const struct PsGrid *grid,
                             struct PsAmplitude **out);

/**
 * Normalized momentum amplitude at coupling time `t`.
 *
 * # Safety
 * As for [`ps_steady_pairwise`].
 */
enum PsStatus ps_amplitude_at_time(const struct PsModelParams *params,
                                   const struct PsGrid *grid,
                                   double t,
                                   struct PsAmplitude **out);

/**
 * # Safety
 * `amp` must be null or a live amplitude handle.
 */
void ps_amplitude_free(struct PsAmplitude *amp);

/**
 * Points per axis of an amplitude, or 0 for a null handle.
 *
 * # Safety
 * `amp` must be null or a live handle.
 */
size_t ps_amplitude_n_points(const struct PsAmplitude *amp);

/**
 * Copies the amplitude into `buf` as `2·n²` interleaved doubles.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum PsStatus ps_amplitude_copy_values(const struct PsAmplitude *amp, double *buf, size_t len);

/**
 * Grid inner product `Σ conj(a)·b·h²`.
 *
 * # Safety
 * Handles must be live; `re` and `im` must be valid for writes.
 */
enum PsStatus ps_inner_product(const struct PsAmplitude *a,
                               const struct PsAmplitude *b,
                               double *re,
                               double *im);

/**
 * Schmidt decomposition. With `with_modes` false only the spectrum is
 * computed, which is cheaper.
 *
 * # Safety
 * `amp` must be live; `out` must be valid for writes.
 */
enum PsStatus ps_schmidt(const struct PsAmplitude *amp, bool with_modes, struct PsSpectrum **out);

/**
 * # Safety
 * `spec` must be null or a live spectrum handle.
 */
void ps_spectrum_free(struct PsSpectrum *spec);

/**
 * Schmidt number `1/Σλ²`, or NaN for a null handle.
 *
 * # Safety
 * `spec` must be null or live.
 */
double ps_spectrum_k_number(const struct PsSpectrum *spec);

/**
 * Entanglement entropy in bits, or NaN for a null handle.
 *
 * # Safety
 * `spec` must be null or live.
 */
double ps_spectrum_entropy(const struct PsSpectrum *spec);

/**
 * Number of retained eigenvalues, or 0 for a null handle.
 *
 * # Safety
 * `spec` must be null or live.
 */
size_t ps_spectrum_rank(const struct PsSpectrum *spec);

/**
 * Copies up to `len` eigenvalues (descending) into `buf` and stores the
 * number copied in `written`.
 *
 * # Safety
 * `buf` must be valid for `len` doubles; `written` valid for writes.
 */
enum PsStatus ps_spectrum_copy_lambdas(const struct PsSpectrum *spec,
                                       double *buf,
                                       size_t len,
                                       size_t *written);

/**
 * Copies Schmidt mode `index` of particle a (`particle` 0) or b (1) into
 * `buf` as `2·n` interleaved doubles, normalized on the grid.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum PsStatus ps_spectrum_copy_mode(const struct PsSpectrum *spec,
                                    uint32_t particle,
                                    size_t index,
                                    double *buf,
                                    size_t len);

/**
 * Schmidt number from the purity of the reduced density matrix, computed
 * without a decomposition.
 *
 * # Safety
 * `amp` must be live; `out` valid for writes.
 */
enum PsStatus ps_purity_k(const struct PsAmplitude *amp, double *out);

/**
 * Closed-form Schmidt number of the pairwise state and its small-δ
 * approximation.
 *
 * # Safety
 * `exact` and `approx` must be valid for writes.
 */
enum PsStatus ps_analytic_k(double delta, double *exact, double *approx);

/**
 * Writes `<dir>/<name>.meta` and `<dir>/<name>.dat`.
 *
 * # Safety
 * Strings must be NUL-terminated; pointers valid.
 */
enum PsStatus ps_state_write(const struct PsAmplitude *amp,
                             const struct PsModelParams *params,
                             const char *dir,
                             const char *name);

/**
 * Reads a state file pair. `path` may name the stem or either file.
 * `params_out` may be null.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` valid for writes.
 */
enum PsStatus ps_state_read(const char *path,
                            struct PsAmplitude **out,
                            struct PsModelParams *params_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRSCATTER_H */
