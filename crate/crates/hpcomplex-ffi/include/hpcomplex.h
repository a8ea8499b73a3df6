#ifndef HPCOMPLEX_H
#define HPCOMPLEX_H

/* Generated by cbindgen from hpcomplex-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  /**
   * Success.
   */
  HP_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  HP_STATUS_NULL_POINTER = 1,
  /**
   * Input could not be parsed (JSON or cycle notation).
   */
  HP_STATUS_PARSE = 2,
  /**
   * The operation ran but a mathematical precondition failed
   * (odd dimension required, singular fiber, wild loop, ...).
   */
  HP_STATUS_CHECK_FAILED = 3,
  /**
   * Internal panic; the handle states are unchanged.
   */
  HP_STATUS_INTERNAL = 4,
} HpStatus;

/**
 * Opaque HP complex handle.
 */
typedef struct HpModel HpModel;

/**
 * Opaque sampled unitary loop handle.
 */
typedef struct HpUnitaryLoop HpUnitaryLoop;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread. Never null.
 */
const char *hp_last_error_message(void);

/**
 * Parse a model (bare complex JSON or a model-gen bundle) into a handle.
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to writable space
 * for one pointer.
 */
HpStatus hp_model_from_json(const char *json, HpModel **out);

/**
 * Build a suspension model from a permutation in cycle notation (1-indexed,
 * e.g. "(1 2)(3)") and a vertices-per-domain count.
 *
 * # Safety
 * `sigma` must be NUL-terminated; `out` must be writable.
 */
HpStatus hp_model_suspension(const char *sigma, uintptr_t k, HpModel **out);

/**
 * Release a model handle. Null is ignored.
 *
 * # Safety
 * `model` must have been produced by this library and not freed before.
 */
void hp_model_free(HpModel *model);

/**
 * Serialize a model back to JSON.
 *
 * # Safety
 * `model` must be a live handle; `out_json` must be writable. The returned
 * string is released with `hp_string_free`.
 */
HpStatus hp_model_to_json(const HpModel *model, char **out_json);

/**
 * Run the HP axiom validators (complex, duality, bounded-transform lemma,
 * acyclicity biconditional). Writes the JSON report and the overall verdict;
 * `samples = 0` selects the default grid of 256.
 *
 * # Safety
 * `model` must be a live handle; out-pointers must be writable.
 */
HpStatus hp_validate(const HpModel *model,
                     uintptr_t samples,
                     char **out_report_json,
                     bool *out_pass);

/**
 * Compute the signature unitary `(B + S)(B - S)^{-1}` on the sample grid.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
HpStatus hp_signature(const HpModel *model, uintptr_t samples, HpUnitaryLoop **out);

/**
 * Signature winding of a model, with automatic grid refinement.
 *
 * # Safety
 * `model` must be a live handle; `out_winding` must be writable.
 */
HpStatus hp_signature_winding(const HpModel *model, uintptr_t samples, int64_t *out_winding);

/**
 * Release a unitary loop handle. Null is ignored.
 *
 * # Safety
 * `u` must have been produced by this library and not freed before.
 */
void hp_unitary_free(HpUnitaryLoop *u);

/**
 * Parse a unitary loop from JSON.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
HpStatus hp_unitary_from_json(const char *json, HpUnitaryLoop **out);

/**
 * Serialize a unitary loop to JSON.
 *
 * # Safety
 * `u` must be a live handle; `out_json` must be writable.
 */
HpStatus hp_unitary_to_json(const HpUnitaryLoop *u, char **out_json);

/**
 * Winding number of the determinant of a unitary loop.
 *
 * # Safety
 * `u` must be a live handle; out-pointers must be writable.
 */
HpStatus hp_winding(const HpUnitaryLoop *u, int64_t *out_winding, double *out_residual);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must have come from this library and not been freed before.
 */
void hp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HPCOMPLEX_H */
