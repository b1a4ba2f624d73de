#ifndef CURE_H
#define CURE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CureStatus {
  CURE_STATUS_OK = 0,
  // A required pointer argument was null.
  CURE_STATUS_NULL_ARGUMENT = 1,
  // Bad input, configuration, or a missing file.
  CURE_STATUS_INVALID_INPUT = 2,
  // I/O or internal failure.
  CURE_STATUS_RUNTIME = 3,
  // A panic was caught at the boundary.
  CURE_STATUS_PANIC = 4,
} CureStatus;

// A trained model loaded from a checkpoint.
typedef struct CureModel CureModel;

// A pretrained word-vector table.
typedef struct CureVectors CureVectors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on the same thread.
const char *cure_last_error(void);

// Release a string returned by the library. Null is ignored.
void cure_string_free(char *s);

// Load a checkpoint and its metadata sidecar.
enum CureStatus cure_model_load(const char *checkpoint, struct CureModel **model_out);

void cure_model_free(struct CureModel *model);

// Length of the relation vectors this model produces; 0 for null.
uintptr_t cure_model_relation_dim(const struct CureModel *model);

// Relation vector of one entity pair. `paths_json` is a JSON array of
// `{"words": [...], "deps": [...], "poss": [...]}` objects, one per
// sentence; `out_vec` receives `out_len` values, which must equal
// `cure_model_relation_dim`.
enum CureStatus cure_model_encode(const struct CureModel *model,
                                  const char *paths_json,
                                  double *out_vec,
                                  uintptr_t out_len);

// Load a word-vector text file.
enum CureStatus cure_vectors_load(const char *path, struct CureVectors **vectors_out);

void cure_vectors_free(struct CureVectors *vectors);

// Vector dimension; 0 for null.
uintptr_t cure_vectors_dim(const struct CureVectors *vectors);

// Average-linkage clustering of `n` row-major vectors of length `dim` into
// `k` clusters. `assignments` receives one cluster id per row; ids are
// ordered by cluster size, largest first.
enum CureStatus cure_cluster(const double *data,
                             uintptr_t n,
                             uintptr_t dim,
                             uintptr_t k,
                             uintptr_t *assignments);

// Rand index between two labelings of the same `n` items.
enum CureStatus cure_rand_index(const uintptr_t *predicted,
                                const uintptr_t *gold,
                                uintptr_t n,
                                double *result);

// Word-vector-similarity label for a candidate multiset of `n` words with
// their counts. The chosen word goes to `label_out`; release it with
// `cure_string_free`.
enum CureStatus cure_wvs_label(const struct CureVectors *vectors,
                               const char *const *words,
                               const uintptr_t *counts,
                               uintptr_t n,
                               char **label_out);

// Run every stage. `config_path` may be null; `overrides` holds `n`
// `key=value` strings applied after the file.
enum CureStatus cure_run_pipeline(const char *config_path,
                                  const char *const *overrides,
                                  uintptr_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURE_H */
