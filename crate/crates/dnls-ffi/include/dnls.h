#ifndef DNLS_H
#define DNLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DnlsStatus {
  DNLS_STATUS_OK = 0,
  DNLS_STATUS_NULL_POINTER = 1,
  DNLS_STATUS_INVALID_ARGUMENT = 2,
  DNLS_STATUS_INVALID_GRID = 3,
  DNLS_STATUS_DOMAIN = 4,
  DNLS_STATUS_BOUNDARY_MASS = 5,
  DNLS_STATUS_MASS_DRIFT = 6,
  DNLS_STATUS_PRECONDITION = 7,
  DNLS_STATUS_NON_FINITE = 8,
  DNLS_STATUS_OTHER = 9,
  DNLS_STATUS_PANIC = 10,
} DnlsStatus;

/**
 * Distorted Fourier plan for one grid and potential strength.
 */
typedef struct DnlsPlan DnlsPlan;

/**
 * Strang evolution of the cubic equation on a plan's grid.
 */
typedef struct DnlsState DnlsState;

/**
 * V(t) and its inverse for one potential strength.
 */
typedef struct DnlsVops DnlsVops;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Valid until the next failure.
 */
const char *dnls_last_error(void);

void dnls_clear_error(void);

/**
 * Transmission and reflection coefficients at frequency `xi`, each as (re, im).
 *
 * # Safety
 * `t_out` and `r_out` must each point to two writable doubles.
 */
enum DnlsStatus dnls_scattering(double q, double xi, double *t_out, double *r_out);

/**
 * Fresnel boundary function Fr(y) for y >= 0, written as (re, im).
 *
 * # Safety
 * `out` must point to two writable doubles.
 */
enum DnlsStatus dnls_fresnel_fr(double y, double *out);

/**
 * Build a plan on [-l, l) with `n` nodes for strength `q`.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with `dnls_plan_free`.
 */
enum DnlsStatus dnls_plan_new(double l, size_t n, double q, struct DnlsPlan **out);

/**
 * # Safety
 * `plan` must come from `dnls_plan_new` and not be used afterwards. Null is ignored.
 */
void dnls_plan_free(struct DnlsPlan *plan);

/**
 * Number of grid nodes, or 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
size_t dnls_plan_len(const struct DnlsPlan *plan);

/**
 * # Safety
 * `input` and `out` must hold `2 n` doubles; they may alias.
 */
enum DnlsStatus dnls_plan_forward(const struct DnlsPlan *plan, const double *input, double *out);

/**
 * # Safety
 * `input` and `out` must hold `2 n` doubles; they may alias.
 */
enum DnlsStatus dnls_plan_inverse(const struct DnlsPlan *plan, const double *input, double *out);

/**
 * Linear propagator U(t) applied to position samples.
 *
 * # Safety
 * `input` and `out` must hold `2 n` doubles; they may alias.
 */
enum DnlsStatus dnls_linear_flow(const struct DnlsPlan *plan,
                                 double t,
                                 const double *input,
                                 double *out);

/**
 * # Safety
 * `out` must be a valid pointer; the handle is released with `dnls_vops_free`.
 */
enum DnlsStatus dnls_vops_new(double q, struct DnlsVops **out);

/**
 * # Safety
 * `ops` must come from `dnls_vops_new` and not be used afterwards. Null is ignored.
 */
void dnls_vops_free(struct DnlsVops *ops);

/**
 * V(t) (or its inverse when `inverse` is true) on samples over [-l, l) with `n` nodes.
 * The output lives on the same grid.
 *
 * # Safety
 * `input` and `out` must hold `2 n` doubles; they may alias.
 */
enum DnlsStatus dnls_vops_apply(const struct DnlsVops *ops,
                                double l,
                                size_t n,
                                double t,
                                bool inverse,
                                const double *input,
                                double *out);

/**
 * Start an evolution at t = 0 from position samples `u0` on the plan's grid.
 *
 * # Safety
 * `u0` must hold `2 n` doubles and `out` be a valid pointer. The state keeps its own
 * reference to the plan, so the plan handle may be freed first.
 */
enum DnlsStatus dnls_state_new(const struct DnlsPlan *plan,
                               double lambda,
                               const double *u0,
                               struct DnlsState **out);

/**
 * # Safety
 * `state` must come from `dnls_state_new` and not be used afterwards. Null is ignored.
 */
void dnls_state_free(struct DnlsState *state);

/**
 * Step with Strang splitting until `t_end`, the last step shortened to land on it.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum DnlsStatus dnls_state_advance(struct DnlsState *state, double t_end, double dt);

/**
 * Current time, samples, relative mass drift and energy. Any output pointer may be null.
 *
 * # Safety
 * `state` must be a live handle; `u_out`, when set, must hold `2 n` doubles.
 */
enum DnlsStatus dnls_state_read(const struct DnlsState *state,
                                double *t_out,
                                double *u_out,
                                double *mass_drift_out,
                                double *energy_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DNLS_H */
