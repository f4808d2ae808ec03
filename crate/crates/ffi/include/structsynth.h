#ifndef STRUCTSYNTH_H
#define STRUCTSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SS_DOMAIN_SLIDE 0

#define SS_DOMAIN_UI 1

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_ARGUMENT = 1,
  SS_STATUS_INVALID_UTF8 = 2,
  SS_STATUS_INVALID_ARGUMENT = 3,
  SS_STATUS_PARSE_FAILED = 4,
  SS_STATUS_UNKNOWN_LABEL = 5,
  SS_STATUS_RENDER_FAILED = 6,
  SS_STATUS_PANIC = 7,
} SsStatus;

/**
 * A parsed document plus the diagnostics from parsing it.
 */
typedef struct SsDocument SsDocument;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses `len` bytes of markup. Invalid UTF-8 is replaced, not rejected.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
enum SsStatus ss_document_parse(const uint8_t *bytes,
                                size_t len,
                                uint32_t domain_id,
                                struct SsDocument **out);

/**
 * # Safety
 * `doc` must be null or a handle from this library not yet freed.
 */
void ss_document_free(struct SsDocument *doc);

/**
 * Parse diagnostics as a JSON array.
 *
 * # Safety
 * `doc` must be a live handle; `out` must be writable.
 */
enum SsStatus ss_document_diagnostics_json(const struct SsDocument *doc, char **out);

/**
 * Applies the repair heuristics, producing a new document. When `report` is
 * not null it receives the applied repairs as JSON lines.
 *
 * # Safety
 * `doc` must be a live handle; `out` must be writable; `report` may be null.
 */
enum SsStatus ss_document_repair(const struct SsDocument *doc,
                                 struct SsDocument **out,
                                 char **report);

/**
 * # Safety
 * `doc` must be a live handle; `out` must be writable.
 */
enum SsStatus ss_document_serialize(const struct SsDocument *doc, char **out);

/**
 * # Safety
 * `doc` must be a live handle; `out` must be writable.
 */
enum SsStatus ss_document_extract_text(const struct SsDocument *doc, char **out);

/**
 * Labeled boxes as a JSON array. A 0x0 viewport means the domain default.
 *
 * # Safety
 * `doc` must be a live handle; `out` must be writable.
 */
enum SsStatus ss_document_boxes_json(const struct SsDocument *doc,
                                     uint32_t width,
                                     uint32_t height,
                                     char **out);

/**
 * Lint findings as a JSON array. A 0x0 viewport means the domain default.
 *
 * # Safety
 * `doc` must be a live handle; `out` must be writable.
 */
enum SsStatus ss_document_lint_json(const struct SsDocument *doc,
                                    uint32_t width,
                                    uint32_t height,
                                    char **out);

/**
 * Renders the document to PNG with offline placeholder assets.
 *
 * # Safety
 * `doc` must be a live handle; `out` and `out_len` must be writable.
 */
enum SsStatus ss_document_render_png(const struct SsDocument *doc,
                                     uint32_t width,
                                     uint32_t height,
                                     uint64_t seed,
                                     uint8_t **out,
                                     size_t *out_len);

/**
 * Lexical alignment score in [0, 1].
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
enum SsStatus ss_lexical_score(const char *doc_text, const char *description, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SsStatus ss_schema_describe_json(char **out);

/**
 * Maps a raw label to its canonical class name.
 *
 * # Safety
 * `raw` must be NUL-terminated; `out` must be writable.
 */
enum SsStatus ss_canonicalize_label(const char *raw, uint32_t domain_id, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ss_string_free(char *s);

/**
 * # Safety
 * `bytes` must be null or a buffer returned by this library with its length.
 */
void ss_bytes_free(uint8_t *bytes, size_t len);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *ss_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRUCTSYNTH_H */
