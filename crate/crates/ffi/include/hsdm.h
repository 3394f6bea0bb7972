#ifndef HSDM_H
#define HSDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the CLI exit codes where both exist.
 */
typedef enum HsdmStatus {
  HSDM_STATUS_OK = 0,
  HSDM_STATUS_RUNTIME = 1,
  HSDM_STATUS_INVALID_INPUT = 2,
  HSDM_STATUS_DIVERGENCE = 3,
  HSDM_STATUS_NO_MODULUS = 4,
  HSDM_STATUS_CHECK_FAILED = 5,
  HSDM_STATUS_NULL_ARGUMENT = 6,
  HSDM_STATUS_INVALID_UTF8 = 7,
  HSDM_STATUS_PANIC = 8,
} HsdmStatus;

/**
 * A validated problem.
 */
typedef struct HsdmProblem HsdmProblem;

/**
 * Options for [`hsdm_verify`]. `budget == 0` keeps the problem's budget and
 * `has_seed == false` keeps its seed.
 */
typedef struct HsdmVerifyOptions {
  double epsilon;
  size_t cases;
  size_t steps;
  uint64_t budget;
  uint64_t seed;
  bool has_seed;
} HsdmVerifyOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a problem from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HsdmStatus hsdm_problem_from_json(const char *json, struct HsdmProblem **out);

/**
 * Loads and validates a problem file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HsdmStatus hsdm_problem_load(const char *path, struct HsdmProblem **out);

/**
 * Releases a problem handle. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void hsdm_problem_free(struct HsdmProblem *p);

/**
 * Dimension of the problem's space, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t hsdm_problem_dimension(const struct HsdmProblem *p);

/**
 * Runs `steps` iterations. `scheme` may be null for the problem's default.
 * Writes `{"summary": ..., "points": [[...], ...]}`.
 *
 * # Safety
 * Pointers must be valid as documented; `out_json` receives a string to be
 * released with `hsdm_string_free`.
 */
enum HsdmStatus hsdm_solve(const struct HsdmProblem *p,
                           const char *scheme,
                           size_t steps,
                           char **out_json);

/**
 * Evaluates a rate certificate. `g` may be null for `n+1`; `mode` is one of
 * `single`, `full`, `quant`, `family`, `asy`.
 *
 * The certificate is written even when its empirical witness exceeds the
 * bound; the status is then `CHECK_FAILED`.
 *
 * # Safety
 * Pointers must be valid as documented.
 */
enum HsdmStatus hsdm_certify(const struct HsdmProblem *p,
                             double epsilon,
                             const char *g,
                             const char *mode,
                             char **out_json);

/**
 * Runs verification suites (`lemmas`, `adversary`, `confinement`, `all`).
 * `opts` may be null for the defaults. The report is written even when a
 * check fails; the status is then `CHECK_FAILED`.
 *
 * # Safety
 * Pointers must be valid as documented.
 */
enum HsdmStatus hsdm_verify(const struct HsdmProblem *p,
                            const char *suite,
                            const struct HsdmVerifyOptions *opts,
                            char **out_json);

/**
 * Default verification options.
 */
struct HsdmVerifyOptions hsdm_verify_options_default(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * call into the library on the same thread.
 */
const char *hsdm_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hsdm_string_free(char *s);

/**
 * Library version, a static string.
 */
const char *hsdm_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HSDM_H */
