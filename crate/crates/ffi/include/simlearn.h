#ifndef SIMLEARN_H
#define SIMLEARN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SimlearnStatus {
  SIMLEARN_STATUS_OK = 0,
  SIMLEARN_STATUS_NULL_ARGUMENT = 1,
  SIMLEARN_STATUS_INVALID_UTF8 = 2,
  SIMLEARN_STATUS_IO = 3,
  SIMLEARN_STATUS_INVALID_DATA = 4,
  SIMLEARN_STATUS_UNKNOWN_INSTANCE = 5,
  SIMLEARN_STATUS_SELF_PAIR = 6,
  SIMLEARN_STATUS_SCORE_OUT_OF_RANGE = 7,
  SIMLEARN_STATUS_INVALID_ARGUMENT = 8,
  SIMLEARN_STATUS_INTERNAL = 9,
} SimlearnStatus;

typedef enum SimlearnSide {
  SIMLEARN_SIDE_LEFT = 0,
  SIMLEARN_SIDE_RIGHT = 1,
} SimlearnSide;

/**
 * Opaque session handle.
 */
typedef struct SimlearnSession SimlearnSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens a session over a schema and records file. `labels_path` may be
 * null for an in-memory label log. On success `*out` owns a new handle.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings and `out`
 * must be writable.
 */
enum SimlearnStatus simlearn_session_open(const char *schema_path,
                                          const char *records_path,
                                          const char *labels_path,
                                          struct SimlearnSession **out);

/**
 * Releases a session. Null is ignored.
 *
 * # Safety
 * `session` must be null or a handle from `simlearn_session_open` that
 * has not been freed.
 */
void simlearn_session_free(struct SimlearnSession *session);

/**
 * Number of instances after sparse-attribute filtering.
 *
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum SimlearnStatus simlearn_session_instance_count(const struct SimlearnSession *session,
                                                    size_t *out);

/**
 * Records a user label and retrains the model.
 *
 * # Safety
 * `session` must be a live handle not used concurrently from another
 * thread; `a` and `b` must be valid strings.
 */
enum SimlearnStatus simlearn_session_add_label(struct SimlearnSession *session,
                                               const char *a,
                                               const char *b,
                                               double score);

/**
 * Current model snapshot as JSON.
 *
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum SimlearnStatus simlearn_session_model_json(const struct SimlearnSession *session, char **out);

/**
 * Nearest neighbors of `query` as JSON; `k` of 0 uses the default.
 *
 * # Safety
 * `session` must be a live handle, `query` a valid string and `out`
 * writable.
 */
enum SimlearnStatus simlearn_session_knn_json(const struct SimlearnSession *session,
                                              const char *query,
                                              size_t k,
                                              char **out);

/**
 * Suggested labeling partners for `anchor` as JSON; `k` of 0 uses the
 * default.
 *
 * # Safety
 * `session` must be a live handle, `anchor` a valid string and `out`
 * writable.
 */
enum SimlearnStatus simlearn_session_suggest_json(const struct SimlearnSession *session,
                                                  const char *anchor,
                                                  enum SimlearnSide side,
                                                  size_t k,
                                                  char **out);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *simlearn_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string obtained from this library that has not
 * been freed.
 */
void simlearn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMLEARN_H */
