#ifndef ASD_H
#define ASD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of an API call.
 */
typedef enum AsdStatus {
  ASD_STATUS_OK = 0,
  ASD_STATUS_NULL_POINTER = 1,
  ASD_STATUS_PARSE = 2,
  ASD_STATUS_INVALID_GRAPH = 3,
  ASD_STATUS_INFEASIBLE = 4,
  ASD_STATUS_ENGINE = 5,
  ASD_STATUS_UTF8 = 6,
  ASD_STATUS_PANIC = 7,
} AsdStatus;

/**
 * Verification outcome written by [`asd_decomposition_verify`].
 */
typedef enum AsdVerdict {
  ASD_VERDICT_VALID = 0,
  ASD_VERDICT_INVALID = 1,
  ASD_VERDICT_UNDECIDED = 2,
} AsdVerdict;

/**
 * Opaque engine configuration handle.
 */
typedef struct AsdConfig AsdConfig;

/**
 * Opaque decomposition handle; owns its JSON rendering.
 */
typedef struct AsdDecomposition AsdDecomposition;

/**
 * Opaque graph handle.
 */
typedef struct AsdGraph AsdGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *asd_last_error_message(void);

/**
 * Parses an edge list (vertex count line, then `u v` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AsdStatus asd_graph_parse(const char *text, struct AsdGraph **out);

/**
 * Builds a graph on `n` vertices from `edge_count` pairs stored as
 * `pairs[2i], pairs[2i+1]`.
 *
 * # Safety
 * `pairs` must point to `2 * edge_count` readable values (or be null when
 * `edge_count` is 0), and `out` must be valid.
 */
enum AsdStatus asd_graph_from_edges(size_t n,
                                    const size_t *pairs,
                                    size_t edge_count,
                                    struct AsdGraph **out);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t asd_graph_edge_count(const struct AsdGraph *g);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void asd_graph_free(struct AsdGraph *g);

/**
 * New configuration for profile 0 (desk) or 1 (paper); null otherwise.
 */
struct AsdConfig *asd_config_new(uint32_t profile);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum AsdStatus asd_config_set_seed(struct AsdConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum AsdStatus asd_config_set_fallback_m(struct AsdConfig *cfg, size_t fallback_m);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void asd_config_free(struct AsdConfig *cfg);

/**
 * Computes a verified ascending decomposition of `g`. A null `cfg` means
 * the desk defaults.
 *
 * # Safety
 * `g` must be live, `cfg` null or live, and `out` valid.
 */
enum AsdStatus asd_decompose(const struct AsdGraph *g,
                             const struct AsdConfig *cfg,
                             struct AsdDecomposition **out);

/**
 * Number of parts, or 0 for a null handle.
 *
 * # Safety
 * `d` must be null or live.
 */
size_t asd_decomposition_part_count(const struct AsdDecomposition *d);

/**
 * Edge count of part `index`, or 0 when out of range.
 *
 * # Safety
 * `d` must be null or live.
 */
size_t asd_decomposition_part_size(const struct AsdDecomposition *d, size_t index);

/**
 * JSON form of the decomposition, owned by the handle.
 *
 * # Safety
 * `d` must be null or live; the string dies with the handle.
 */
const char *asd_decomposition_json(const struct AsdDecomposition *d);

/**
 * Checks `d` against `g` and writes the verdict.
 *
 * # Safety
 * All pointers must be valid.
 */
enum AsdStatus asd_decomposition_verify(const struct AsdGraph *g,
                                        const struct AsdDecomposition *d,
                                        enum AsdVerdict *verdict);

/**
 * # Safety
 * `d` must be null or a handle not yet freed.
 */
void asd_decomposition_free(struct AsdDecomposition *d);

/**
 * Separates `1..=m` into parts with the given sums and writes the result
 * as JSON to `*out`, to be released with [`asd_string_free`].
 *
 * # Safety
 * `targets` must point to `len` readable values and `out` must be valid.
 */
enum AsdStatus asd_separate_json(size_t m, const size_t *targets, size_t len, char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void asd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASD_H */
