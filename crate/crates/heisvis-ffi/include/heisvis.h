/* C ABI for heisvis: derivation-induced visual quasimetrics on Heisenberg group boundaries. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum HvStatus {
  HV_STATUS_OK = 0,
  // A required pointer argument was null.
  HV_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  HV_STATUS_INVALID_UTF8 = 2,
  // Spec text failed to parse; see hv_last_error_message.
  HV_STATUS_PARSE_ERROR = 3,
  // Input rejected (wrong dimensions, not a derivation, bad scale ...).
  HV_STATUS_INVALID_INPUT = 4,
  // A converged computation failed numerically.
  HV_STATUS_NUMERIC_ERROR = 5,
  // The two structures are not quasiisometrically equivalent.
  HV_STATUS_NOT_EQUIVALENT = 6,
  // An output buffer is shorter than required.
  HV_STATUS_BUFFER_TOO_SMALL = 7,
  // A panic was caught at the boundary; state is unspecified.
  HV_STATUS_INTERNAL_PANIC = 8,
} HvStatus;

// A boundary isometry between two equivalent structures. Opaque.
typedef struct HvIsometry HvIsometry;

// A validated graded structure (derivation eigendecomposition plus adapted
// basis). Opaque; create with hv_structure_from_json/from_matrix, release
// with hv_structure_free.
typedef struct HvStructure HvStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. Valid until
// the next failing call on the same thread; never null.
const char *hv_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hv_version(void);

// Parse a JSON spec (same schema as the CLI) and build its structure.
// On success writes a new handle to `out`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum HvStatus hv_structure_from_json(const char *text, struct HvStructure **out);

// Build a structure from a dense row-major (2n+1) x (2n+1) derivation
// matrix.
//
// # Safety
// `entries` must point to (2n+1)^2 doubles; `out` must be valid.
enum HvStatus hv_structure_from_matrix(uintptr_t n,
                                       const double *entries,
                                       struct HvStructure **out);

// Release a structure handle. Null is ignored.
//
// # Safety
// `s` must be a handle from a structure constructor, not yet freed.
void hv_structure_free(struct HvStructure *s);

// Heisenberg index n; 0 if the handle is null.
//
// # Safety
// `s` must be a live structure handle or null.
uintptr_t hv_structure_n(const struct HvStructure *s);

// Grading depth k (number of non-center blocks); 0 if null.
//
// # Safety
// `s` must be a live structure handle or null.
uintptr_t hv_structure_k(const struct HvStructure *s);

// Number of distinct eigenvalues (k + 1, counting the center); 0 if null.
//
// # Safety
// `s` must be a live structure handle or null.
uintptr_t hv_structure_block_count(const struct HvStructure *s);

// Copy the increasing eigenvalues into `out` (capacity `len`); writes
// hv_structure_block_count(s) values.
//
// # Safety
// `s` must be a live handle; `out` must point to at least `len` doubles.
enum HvStatus hv_structure_eigenvalues(const struct HvStructure *s, double *out, uintptr_t len);

// Copy the block dimensions (m_1 ... m_k, m_center) into `out`.
//
// # Safety
// `s` must be a live handle; `out` must point to at least `len` usize.
enum HvStatus hv_structure_dims(const struct HvStructure *s, uintptr_t *out, uintptr_t len);

// Quasinorm of x at metric scale `scale` (use 1.0 for the unit metric).
//
// # Safety
// `s` live handle; `x` points to `len` doubles; `out` valid.
enum HvStatus hv_norm(const struct HvStructure *s,
                      double scale,
                      const double *x,
                      uintptr_t len,
                      double *out);

// Quasimetric distance d_A(p, q) at metric scale `scale`.
//
// # Safety
// `s` live handle; `p`, `q` point to `len` doubles; `out` valid.
enum HvStatus hv_dist(const struct HvStructure *s,
                      double scale,
                      const double *p,
                      const double *q,
                      uintptr_t len,
                      double *out);

// Quasiisometric equivalence of two structures. Writes 1/0 to
// `out_equivalent` and the exponent ratio lambda (alpha_1/beta_1) to
// `out_lambda` (NaN when not equivalent).
//
// # Safety
// `a`, `b` live handles; output pointers valid.
enum HvStatus hv_classify(const struct HvStructure *a,
                          const struct HvStructure *b,
                          bool *out_equivalent,
                          double *out_lambda);

// Build the boundary isometry from `a` to `b`; fails with
// HV_STATUS_NOT_EQUIVALENT when none exists.
//
// # Safety
// `a`, `b` live handles; `out` valid.
enum HvStatus hv_isometry_build(const struct HvStructure *a,
                                const struct HvStructure *b,
                                struct HvIsometry **out);

// Release an isometry handle. Null is ignored.
//
// # Safety
// `m` must come from hv_isometry_build, not yet freed.
void hv_isometry_free(struct HvIsometry *m);

// Exponent ratio lambda of the map; NaN if the handle is null.
//
// # Safety
// `m` must be a live isometry handle or null.
double hv_isometry_lambda(const struct HvIsometry *m);

// Apply the map to a point (both sides have the same 2n+1 coordinates).
//
// # Safety
// `m` live handle; `x` and `out` point to `len` doubles each.
enum HvStatus hv_isometry_apply(const struct HvIsometry *m,
                                const double *x,
                                uintptr_t len,
                                double *out);

// Copy the (2n+1) x (2n+1) row-major map matrix into `out` (capacity `len`).
//
// # Safety
// `m` live handle; `out` points to at least `len` doubles.
enum HvStatus hv_isometry_matrix(const struct HvIsometry *m, double *out, uintptr_t len);

// Verify the isometry contract on `pairs` random pairs; writes the maximum
// relative error.
//
// # Safety
// `m` live handle; `out_max_rel_error` valid.
enum HvStatus hv_isometry_verify(const struct HvIsometry *m,
                                 uint64_t pairs,
                                 uint64_t seed,
                                 double *out_max_rel_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
