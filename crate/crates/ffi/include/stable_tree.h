#ifndef STABLE_TREE_H
#define STABLE_TREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Status codes.
 */
typedef enum StStatus {
  ST_OK = 0,
  ST_NULL_POINTER = 1,
  ST_INVALID_PARAMETER = 2,
  ST_OUT_OF_RANGE = 3,
  ST_UNSUPPORTED = 4,
  ST_DOMAIN = 5,
  ST_STRUCTURE = 6,
  ST_STATE = 7,
  ST_PARSE = 8,
  ST_IO = 9,
  ST_BUFFER_TOO_SMALL = 10,
  ST_INVALID_UTF8 = 11,
  ST_PANIC = 12,
} StStatus;

/**
 * Opaque tree handle.
 */
typedef struct StTree StTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated,
 * truncated to `capacity`). Returns the full message length plus one.
 */
uintptr_t st_last_error(char *buf, uintptr_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *st_version(void);

/**
 * Grows a tree with `leaves` leaves. `algorithm` is one of "I", "II",
 * "aldous", "normalized-I", "normalized-II", "marchal", "remy".
 */
enum StStatus st_tree_grow(double alpha,
                           uintptr_t leaves,
                           const char *algorithm,
                           uint64_t seed,
                           struct StTree **out);

/**
 * Parses a Newick string into a new tree.
 */
enum StStatus st_tree_from_newick(const char *newick, struct StTree **out);

/**
 * Parses a JSON tree document into a new tree.
 */
enum StStatus st_tree_from_json(const char *json, struct StTree **out);

/**
 * Releases a tree. Null is ignored.
 */
void st_tree_free(struct StTree *tree);

enum StStatus st_tree_leaf_count(const struct StTree *tree, uintptr_t *out);

enum StStatus st_tree_total_length(const struct StTree *tree, double *out);

/**
 * Distance between points `i` and `j`, where 0 is the root and `k ≥ 1` is
 * leaf `k`.
 */
enum StStatus st_tree_distance(const struct StTree *tree, uintptr_t i, uintptr_t j, double *out);

/**
 * Re-checks structural invariants; `ST_STRUCTURE` with a message if broken.
 */
enum StStatus st_tree_check(const struct StTree *tree);

enum StStatus st_tree_to_newick(const struct StTree *tree,
                                char *buf,
                                uintptr_t capacity,
                                uintptr_t *needed);

enum StStatus st_tree_to_json(const struct StTree *tree,
                              char *buf,
                              uintptr_t capacity,
                              uintptr_t *needed);

/**
 * Canonical shape signature (unlabelled, planted at the root).
 */
enum StStatus st_tree_shape(const struct StTree *tree,
                            char *buf,
                            uintptr_t capacity,
                            uintptr_t *needed);

/**
 * Writes `M_1, …, M_steps` into `out` (length `steps`). With `normalized`
 * non-zero, the chain started at `M_1 = 1`.
 */
enum StStatus st_chain_sample(double alpha,
                              uintptr_t steps,
                              uint64_t seed,
                              int32_t normalized,
                              double *out);

/**
 * `E[X^k]` for `X ~ ML(beta, theta)`.
 */
enum StStatus st_ml_moment(double beta, double theta, uint32_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLE_TREE_H */
