#ifndef TRANSMON_READOUT_H
#define TRANSMON_READOUT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Combined three-state label; `TR_LABEL_INVALID` flags bad input codes.
typedef enum TrLabel {
  TR_LABEL_ZERO = 0,
  TR_LABEL_ONE = 1,
  TR_LABEL_TWO = 2,
  TR_LABEL_OVERLAP_ERROR = 3,
  TR_LABEL_INVALID = -1,
} TrLabel;

typedef enum TrStatus {
  TR_STATUS_OK = 0,
  TR_STATUS_NULL_POINTER = 1,
  TR_STATUS_CONFIG = 2,
  TR_STATUS_NUMERIC = 3,
  TR_STATUS_IO = 4,
  TR_STATUS_PANIC = 5,
} TrStatus;

// Opaque trained network.
typedef struct TrFnnModel TrFnnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *tr_last_error(void);

// Level populations at `t_us` after preparing `initial` (0..=3).
//
// # Safety
// `out` must point to 4 writable doubles.
enum TrStatus tr_populations(double t01,
                             double t12,
                             double t23,
                             uint32_t initial,
                             double t_us,
                             double *out);

// `[1 + erf(sqrt(snr^2 / 8))] / 2`.
double tr_ideal_fidelity(double snr);

// SNR at which the ideal fidelity equals `fidelity` (in `[0.5, 1)`).
//
// # Safety
// `out` must point to a writable double.
enum TrStatus tr_snr_for_ideal_fidelity(double fidelity, double *out);

// Combines a primary label (0 = `|0>`, 1 = not `|0>`) with a secondary label
// (0 = `|0>`, 1 = `|1>`, 2 = `|2~>`).
enum TrLabel tr_truth_table(uint32_t primary, uint32_t secondary);

// Assignment fidelity of an `n x n` matrix with entries `P(i|j)` at
// `probabilities[i * n + j]`. Uses the two-state formula for `n = 2` and the
// diagonal mean otherwise.
//
// # Safety
// `probabilities` must point to `n * n` doubles and `out` to one.
enum TrStatus tr_assignment_fidelity(const double *probabilities, uintptr_t n, double *out);

// SPAM-mitigated populations: solves `M x = raw` and projects onto the
// probability simplex.
//
// # Safety
// `raw` and `out` must point to `n` doubles, `probabilities` to `n * n`.
enum TrStatus tr_spam_mitigate(const double *raw,
                               const double *probabilities,
                               uintptr_t n,
                               double *out);

// Parses a model from its JSON text.
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer. The
// model must be released with [`tr_fnn_free`].
enum TrStatus tr_fnn_from_json(const char *json, struct TrFnnModel **out);

// Loads a model file written by the CLI.
//
// # Safety
// As [`tr_fnn_from_json`], with `path` a nul-terminated UTF-8 path.
enum TrStatus tr_fnn_load(const char *path, struct TrFnnModel **out);

// Classifies `{I1, Q1, I2, Q2}`. Writes the three state probabilities to
// `probabilities` (may be null) and the most likely state to `label`.
//
// # Safety
// `model` must come from this library; `input` must point to 4 doubles,
// `probabilities` (if non-null) to 3 writable doubles.
enum TrStatus tr_fnn_classify(const struct TrFnnModel *model,
                              const double *input,
                              double *probabilities,
                              enum TrLabel *label);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void tr_fnn_free(struct TrFnnModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSMON_READOUT_H */
