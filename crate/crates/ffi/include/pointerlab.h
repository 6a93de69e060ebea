#ifndef POINTERLAB_H
#define POINTERLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. `PL_OK` is zero; everything else is an error.
typedef enum PlStatus {
  PL_OK = 0,
  PL_NULL_POINTER = 1,
  PL_INVALID_UTF8 = 2,
  PL_PARSE_ERROR = 3,
  PL_VALIDATION_ERROR = 4,
  PL_BUFFER_TOO_SMALL = 5,
  // The scenario has no quantum system (classical or collapse-only file).
  PL_WRONG_KIND = 6,
  PL_ILL_CONDITIONED = 7,
  PL_DEGENERATE = 8,
  PL_DOMAIN_ERROR = 9,
  PL_PANIC = 10,
} PlStatus;

// Opaque scenario handle.
typedef struct PlScenario PlScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse and validate a TOML scenario. On success `*out` owns a new handle.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PlStatus pl_scenario_load_toml(const char *text, struct PlScenario **out);

// Spin-1/2 scenario `z↑ → n(φ, θ) → n'(φ', θ')` with `B = F = (1, -1)`.
// Angles in radians.
//
// # Safety
// `out` must be writable.
enum PlStatus pl_scenario_from_spin(double phi,
                                    double theta,
                                    double phi_final,
                                    double theta_final,
                                    struct PlScenario **out);

// Release a handle. Null is ignored.
//
// # Safety
// `sc` must come from a `pl_scenario_*` constructor and not be used again.
void pl_scenario_free(struct PlScenario *sc);

// Hilbert-space (or network) dimension N.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum PlStatus pl_scenario_dim(const struct PlScenario *sc, size_t *out);

// Quasi-probability table, row-major `out[j * N + i]`; `len >= N * N`.
//
// # Safety
// `sc` must be a live handle; `out` must hold `len` doubles.
enum PlStatus pl_quasi_probabilities(const struct PlScenario *sc, double *out, size_t len);

// `|⟨f_j|U2 U1|I⟩|²` for every j; `len >= N`.
//
// # Safety
// `sc` must be a live handle; `out` must hold `len` doubles.
enum PlStatus pl_arrival_probabilities(const struct PlScenario *sc, double *out, size_t len);

// `|⟨b_i|U1|I⟩|²` for every i; `len >= N`.
//
// # Safety
// `sc` must be a live handle; `out` must hold `len` doubles.
enum PlStatus pl_node_probabilities(const struct PlScenario *sc, double *out, size_t len);

// Weak value of `B̂` post-selected on final state `j`.
//
// # Safety
// `sc` must be a live handle; `re` and `im` must be writable.
enum PlStatus pl_weak_value(const struct PlScenario *sc, size_t j, double *re, double *im);

// Closed-form spin quasi-probabilities `P̃1..P̃4` into `out[4]`.
//
// # Safety
// `out` must hold 4 doubles.
enum PlStatus pl_spin_quasi_probabilities(double phi,
                                          double theta,
                                          double phi_final,
                                          double theta_final,
                                          double *out);

// Collapse centre `Re[Σ A_k B_k / Σ A_k]` of `n` weights and shifts.
// `weights_im` may be null for real weights.
//
// # Safety
// `weights_re` and `shifts` (and `weights_im` if non-null) must hold `n`
// doubles; `out` must be writable.
enum PlStatus pl_collapse_center(const double *weights_re,
                                 const double *weights_im,
                                 const double *shifts,
                                 size_t n,
                                 double *out);

// Message of the last failed call on this thread (empty after success).
// Valid until the next call on the same thread.
const char *pl_last_error_message(void);

// Library version, static storage.
const char *pl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POINTERLAB_H */
