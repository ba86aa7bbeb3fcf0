/* C interface to the tlegate controlled-phase gate simulator. Generated by cbindgen; do not edit. */

#ifndef TLEGATE_H
#define TLEGATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; the numeric values of CONFIG and NUMERIC match the CLI exit codes.
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_POINTER = 1,
  TG_STATUS_CONFIG = 2,
  TG_STATUS_NUMERIC = 3,
  TG_STATUS_INVALID_UTF8 = 4,
  TG_STATUS_PANIC = 5,
} TgStatus;

// Opaque gate handle.
typedef struct TgGate TgGate;

// Scalar results of one gate run.
typedef struct TgReport {
  double gate_error;
  // NaN when the conditional fidelity is undefined.
  double conditional_gate_error;
  double s1_re;
  double s1_im;
  double s2_re;
  double s2_im;
  double absorption_error_one;
  double absorption_error_two;
} TgReport;

// Trajectory average under pure dephasing.
typedef struct TgMcSummary {
  double mean_fidelity;
  double std_error;
  // NaN when undefined.
  double mean_conditional_fidelity;
  double conditional_std_error;
  size_t n_traj;
} TgMcSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on this thread.
const char *tg_last_error(void);

// Library version as a static NUL-terminated string.
const char *tg_version(void);

// Gate with the default parameters.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TgStatus tg_gate_new(struct TgGate **out);

// Gate from a JSON run configuration; only its `gate` section is used.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for one handle.
enum TgStatus tg_gate_new_from_json(const char *json, struct TgGate **out);

// Release a handle; null is ignored.
//
// # Safety
// `gate` must come from `tg_gate_new*` and not have been freed.
void tg_gate_free(struct TgGate *gate);

// Number of detuning knots.
//
// # Safety
// `gate` must be a live handle and `out` writable.
enum TgStatus tg_gate_knot_count(const struct TgGate *gate, size_t *out);

// Replace the detuning knots; `len` must equal the knot count.
//
// # Safety
// `gate` must be a live handle and `knots` must point to `len` doubles.
enum TgStatus tg_gate_set_knots(struct TgGate *gate, const double *knots, size_t len);

// Run both photon sectors and fill `out`.
//
// # Safety
// `gate` must be a live handle and `out` writable.
enum TgStatus tg_gate_run(const struct TgGate *gate, struct TgReport *out);

// Trajectory-averaged fidelity at the gate's dephasing rate.
//
// # Safety
// `gate` must be a live handle and `out` writable.
enum TgStatus tg_gate_montecarlo(const struct TgGate *gate,
                                 size_t n_traj,
                                 uint64_t seed,
                                 struct TgMcSummary *out);

// Normalized self-phase-modulation mode volume Q·n³/(Qλ³/V).
//
// # Safety
// `out` must be writable.
enum TgStatus tg_spm_normalized_volume(double q, double q_lambda3_over_v, double n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TLEGATE_H */
