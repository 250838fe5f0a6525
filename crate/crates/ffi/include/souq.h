#ifndef SOUQ_H
#define SOUQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SouqStatus {
  SOUQ_STATUS_OK = 0,
  SOUQ_STATUS_NULL_POINTER = 1,
  SOUQ_STATUS_INVALID_ARGUMENT = 2,
  SOUQ_STATUS_INVALID_DISTRIBUTION = 3,
  SOUQ_STATUS_MEASURE_FAILED = 4,
  SOUQ_STATUS_BUFFER_TOO_SMALL = 5,
  SOUQ_STATUS_PANIC = 6,
} SouqStatus;

typedef enum SouqFamily {
  SOUQ_FAMILY_GLOBAL_ENTROPY = 0,
  SOUQ_FAMILY_LABEL_ENTROPY = 1,
  SOUQ_FAMILY_VARIANCE = 2,
} SouqFamily;

/**
 * Opaque second-order distribution.
 */
typedef struct SouqSecondOrder SouqSecondOrder;

typedef struct SouqTriple {
  double total;
  double aleatoric;
  double epistemic;
} SouqTriple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or an empty
 * string. Valid until the next `souq_*` call on the same thread.
 */
const char *souq_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *souq_version(void);

/**
 * Builds a distribution from `num_atoms` row-major probability vectors of
 * length `num_classes`. `weights` may be NULL for uniform weights.
 *
 * # Safety
 * `atoms` must point to `num_atoms * num_classes` doubles, `weights` to
 * `num_atoms` doubles or be NULL, and `out` must be a valid pointer.
 */
enum SouqStatus souq_second_order_new(const double *atoms,
                                      size_t num_atoms,
                                      size_t num_classes,
                                      const double *weights,
                                      struct SouqSecondOrder **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `q` must come from [`souq_second_order_new`] and not be freed twice.
 */
void souq_second_order_free(struct SouqSecondOrder *q);

/**
 * Number of classes, or 0 for NULL.
 *
 * # Safety
 * `q` must be NULL or a live handle.
 */
size_t souq_second_order_num_classes(const struct SouqSecondOrder *q);

/**
 * Number of atoms, or 0 for NULL.
 *
 * # Safety
 * `q` must be NULL or a live handle.
 */
size_t souq_second_order_num_atoms(const struct SouqSecondOrder *q);

/**
 * Computes the global triple and, for label-wise families, the per-label
 * triples. `per_label` may be NULL; otherwise it must hold `per_label_len`
 * entries with `per_label_len >= num_classes` for label-wise families.
 *
 * # Safety
 * `q` must be a live handle, `global` a valid pointer, and `per_label`
 * NULL or valid for `per_label_len` writes.
 */
enum SouqStatus souq_measure(const struct SouqSecondOrder *q,
                             enum SouqFamily family,
                             struct SouqTriple *global,
                             struct SouqTriple *per_label,
                             size_t per_label_len);

/**
 * AUROC with the out-of-distribution scores as the positive class; ties
 * count one half.
 *
 * # Safety
 * `id_scores` and `ood_scores` must hold `n_id` and `n_ood` doubles, and
 * `out` must be a valid pointer.
 */
enum SouqStatus souq_auroc(const double *id_scores,
                           size_t n_id,
                           const double *ood_scores,
                           size_t n_ood,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOUQ_H */
