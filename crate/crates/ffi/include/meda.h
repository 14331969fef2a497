#ifndef MEDA_H
#define MEDA_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MedaStatus {
  MEDA_STATUS_OK = 0,
  MEDA_STATUS_NULL_ARGUMENT = 1,
  MEDA_STATUS_INVALID_UTF8 = 2,
  MEDA_STATUS_PARSE = 3,
  MEDA_STATUS_IO = 4,
  MEDA_STATUS_DERIVATION = 5,
  MEDA_STATUS_NUMERIC = 6,
  MEDA_STATUS_UNVERIFIED = 7,
  MEDA_STATUS_PANIC = 8,
} MedaStatus;

/**
 * A parsed problem file.
 */
typedef struct MedaProblem MedaProblem;

/**
 * A derived algebraic system together with the equations it came from.
 */
typedef struct MedaSystem MedaSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *meda_last_error(void);

const char *meda_version(void);

/**
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum MedaStatus meda_problem_parse(const char *source, struct MedaProblem **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MedaStatus meda_problem_load(const char *path, struct MedaProblem **out);

/**
 * # Safety
 * `problem` must come from this library and not be freed twice.
 */
void meda_problem_free(struct MedaProblem *problem);

/**
 * Derives the algebraic system. `transform` may be NULL (use the balance's
 * suggestion when needed) or an exponent such as `"-1/(n - 1)"`.
 *
 * # Safety
 * Pointers must be valid; `transform` may be NULL.
 */
enum MedaStatus meda_derive(const struct MedaProblem *problem,
                            const char *transform,
                            struct MedaSystem **out);

/**
 * # Safety
 * `system` must come from this library and not be freed twice.
 */
void meda_system_free(struct MedaSystem *system);

/**
 * # Safety
 * Pointers must be valid.
 */
enum MedaStatus meda_system_len(const struct MedaSystem *system, size_t *out);

/**
 * The system as JSON.
 *
 * # Safety
 * Pointers must be valid; free the result with `meda_string_free`.
 */
enum MedaStatus meda_system_json(const struct MedaSystem *system, char **out);

/**
 * Exact check of a candidate (same text format as candidate files).
 * `report_json` may be NULL.
 *
 * # Safety
 * Pointers must be valid; free `*report_json` with `meda_string_free`.
 */
enum MedaStatus meda_verify(const struct MedaSystem *system,
                            const char *candidate,
                            bool *pass,
                            char **report_json);

/**
 * Runs the case files under `fixtures_dir/cases`. `only` may be NULL.
 *
 * # Safety
 * Pointers must be valid; free the result with `meda_string_free`.
 */
enum MedaStatus meda_compat(const char *fixtures_dir, const char *only, char **out);

/**
 * # Safety
 * `s` must come from this library (or be NULL) and not be freed twice.
 */
void meda_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEDA_H */
