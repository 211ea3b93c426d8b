#ifndef DIRMIX_H
#define DIRMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DIRMIX_OK 0

/**
 * A required pointer argument was null.
 */
#define DIRMIX_ERR_NULL_POINTER 1

/**
 * An argument lies outside the domain of the estimator.
 */
#define DIRMIX_ERR_DOMAIN 2

/**
 * Count arrays have incompatible lengths.
 */
#define DIRMIX_ERR_SHAPE 3

/**
 * Inputs contradict each other, e.g. more listed categories than K.
 */
#define DIRMIX_ERR_INCONSISTENT 4

/**
 * Unknown selector, unsupported combination, or invalid UTF-8.
 */
#define DIRMIX_ERR_INVALID_ARGUMENT 5

/**
 * A file could not be read or parsed.
 */
#define DIRMIX_ERR_IO 6

/**
 * An internal panic was caught at the boundary.
 */
#define DIRMIX_ERR_PANIC 7

#define DIRMIX_ESTIMATOR_DPM 0

#define DIRMIX_ESTIMATOR_DP 1

#define DIRMIX_ESTIMATOR_NAIVE 2

#define DIRMIX_ESTIMATOR_JEFFREYS 3

#define DIRMIX_ESTIMATOR_TRYBULA 4

#define DIRMIX_ESTIMATOR_PERKS 5

#define DIRMIX_ESTIMATOR_ZHANG 6

#define DIRMIX_DIVERGENCE_KL 0

#define DIRMIX_DIVERGENCE_HELLINGER_SQ 1

/**
 * Opaque joint histogram of two count samples.
 */
typedef struct DirmixTable DirmixTable;

/**
 * Result of an estimate. Fields guarded by a `has_*` flag are NaN or zero
 * when the flag is 0.
 */
typedef struct DirmixReport {
  double value;
  uint8_t has_posterior_std;
  double posterior_std;
  uint8_t has_diagnostics;
  double alpha_star;
  double beta_star;
  double log_evidence_at_max;
  uint64_t grid_bins_alpha;
  uint64_t grid_bins_beta;
  uint8_t at_boundary;
  uint8_t flat;
  uint8_t collapsed;
} DirmixReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a table from two count arrays of equal length `len` over `k`
 * categories (`len <= k`; unlisted categories have zero counts).
 *
 * # Safety
 * `n` and `m` must each point to `len` readable `uint64_t` values (they may
 * be null when `len` is 0); `out` must be writable.
 */
int32_t dirmix_table_new(const uint64_t *n,
                         const uint64_t *m,
                         size_t len,
                         uint64_t k,
                         struct DirmixTable **out);

/**
 * Reads two `category<TAB>count` files joined on category id. `k = 0`
 * takes K from their `#K=` headers.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
int32_t dirmix_table_from_files(const char *path1,
                                const char *path2,
                                uint64_t k,
                                struct DirmixTable **out);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `table` must come from a constructor of this library and not be used
 * afterwards.
 */
void dirmix_table_free(struct DirmixTable *table);

/**
 * Writes K and the two sample sizes.
 *
 * # Safety
 * `table` must be a live handle; output pointers must be writable.
 */
int32_t dirmix_table_shape(const struct DirmixTable *table,
                           uint64_t *k,
                           uint64_t *n_total,
                           uint64_t *m_total);

/**
 * Runs one estimator.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
int32_t dirmix_estimate(const struct DirmixTable *table,
                        int32_t estimator,
                        int32_t divergence,
                        struct DirmixReport *out);

/**
 * Posterior mean and second moment of `D_KL` at fixed `(alpha, beta)`.
 *
 * # Safety
 * `table` must be a live handle; output pointers must be writable.
 */
int32_t dirmix_posterior_dkl(const struct DirmixTable *table,
                             double alpha,
                             double beta,
                             double *mean,
                             double *second_moment);

/**
 * Posterior mean of the squared Hellinger divergence at fixed
 * `(alpha, beta)`.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
int32_t dirmix_posterior_hellinger_sq(const struct DirmixTable *table,
                                      double alpha,
                                      double beta,
                                      double *out);

/**
 * Mixture-prior entropy estimate of a single count sample.
 *
 * # Safety
 * `counts` must point to `len` readable values (may be null when `len` is
 * 0); `out` must be writable.
 */
int32_t dirmix_entropy_nsb(const uint64_t *counts,
                           size_t len,
                           uint64_t k,
                           struct DirmixReport *out);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *dirmix_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dirmix_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRMIX_H */
