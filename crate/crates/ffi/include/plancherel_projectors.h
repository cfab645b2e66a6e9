#ifndef PLANCHEREL_PROJECTORS_H
#define PLANCHEREL_PROJECTORS_H

/* Generated by cbindgen from the ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a C ABI call. Zero is success; nonzero codes split failures
// the same way the command line exit codes do.
typedef enum {
  // The call succeeded.
  PPX_STATUS_OK = 0,
  // A required pointer argument was null.
  PPX_STATUS_NULL_ARGUMENT = 1,
  // Invalid input: malformed UTF-8 or JSON, unknown suite name,
  // parameters outside the supported envelope.
  PPX_STATUS_INVALID_ARGUMENT = 2,
  // A numeric computation failed (quadrature breakdown or internal
  // evaluation error).
  PPX_STATUS_NUMERIC_FAILURE = 3,
} PpxStatus;

// Opaque handle to an assembled chart-weighted kernel at rank `n` with
// projector index `r`. Build once, apply to many data documents.
typedef struct PpxTheta PpxTheta;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *ppx_version(void);

// Message describing the most recent failure on this thread, empty if the
// last call succeeded. Borrowed; valid until the next library call on the
// same thread. Do not free.
const char *ppx_last_error(void);

// Releases a string returned through a `char **` out-parameter. Null is
// accepted and ignored.
//
// # Safety
// `s` must be null or a pointer previously returned by this library
// through a `char **` out-parameter, not yet freed.
void ppx_string_free(char *s);

// Runs verification suites selected by a flat JSON configuration document
// (same schema as the command line config file; `name` is required and
// may be `"all"`). On success writes a JSON document
// `{"all_pass": bool, "config": {...}, "suites": [{"name", "pass",
// "report"}, ...]}` to `out_json`.
//
// A suite that runs to completion but fails its criteria is still a
// successful call: inspect `all_pass` and the per-suite reports.
//
// # Safety
// `config_json` must be a valid nul-terminated C string; `out_json` must
// be a valid pointer. The returned string must be freed with
// [`ppx_string_free`].
PpxStatus ppx_suite_run(const char *config_json, char **out_json);

// Writes the permutation-sum term table of the torus distribution as a
// JSON document to `out_json`.
//
// # Safety
// `out_json` must be a valid pointer. The returned string must be freed
// with [`ppx_string_free`].
PpxStatus ppx_lambda_terms(size_t p, char **out_json);

// Writes the Fourier coefficients of the torus distribution over the
// index box `|a_j| <= a_bound` as CSV (17 significant digits) to
// `out_csv`.
//
// # Safety
// `out_csv` must be a valid pointer. The returned string must be freed
// with [`ppx_string_free`].
PpxStatus ppx_lambda_fourier(size_t p, int64_t a_bound, char **out_csv);

// Builds a kernel handle. On success writes the handle to `out`; release
// it with [`ppx_theta_free`].
//
// # Safety
// `out` must be a valid pointer.
PpxStatus ppx_theta_new(size_t n, size_t r, PpxTheta **out);

// Releases a kernel handle. Null is accepted and ignored.
//
// # Safety
// `handle` must be null or a pointer returned by [`ppx_theta_new`], not
// yet freed.
void ppx_theta_free(PpxTheta *handle);

// Applies the kernel to a JSON data document (object mapping chart index
// to an exponential-polynomial) and writes the paired value to
// `out_re`/`out_im`.
//
// # Safety
// `handle` must be a live pointer from [`ppx_theta_new`]; `data_json`
// must be a valid nul-terminated C string; `out_re` and `out_im` must be
// valid pointers.
PpxStatus ppx_theta_apply(const PpxTheta *handle,
                          const char *data_json,
                          double *out_re,
                          double *out_im);

// Like [`ppx_theta_apply`], but writes the full per-chart audit document
// (weights, raw pairings, weighted contributions, total value) as JSON to
// `out_json`.
//
// # Safety
// `handle` must be a live pointer from [`ppx_theta_new`]; `data_json`
// must be a valid nul-terminated C string; `out_json` must be a valid
// pointer. The returned string must be freed with [`ppx_string_free`].
PpxStatus ppx_theta_audit(const PpxTheta *handle, const char *data_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANCHEREL_PROJECTORS_H */
