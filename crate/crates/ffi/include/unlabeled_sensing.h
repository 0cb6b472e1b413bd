#ifndef UNLABELED_SENSING_H
#define UNLABELED_SENSING_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum UsCode {
  US_CODE_OK = 0,
  US_CODE_ERR_NULL_POINTER = 1,
  US_CODE_ERR_DIMENSION = 2,
  US_CODE_ERR_INVALID_ARGUMENT = 3,
  US_CODE_ERR_PRECONDITION = 4,
  US_CODE_ERR_DEGENERATE = 5,
  US_CODE_ERR_NON_FINITE = 6,
  US_CODE_ERR_BUFFER_TOO_SMALL = 7,
  US_CODE_ERR_PANIC = 8,
  US_CODE_ERR_OTHER = 9,
} UsCode;

/**
 * Entry distribution for [`us_gen_matrix`].
 */
typedef enum UsDist {
  US_DIST_GAUSSIAN = 0,
  US_DIST_UNIFORM = 1,
} UsDist;

/**
 * Outcome of exact recovery.
 */
typedef enum UsRecoveryStatus {
  US_RECOVERY_STATUS_UNIQUE = 0,
  US_RECOVERY_STATUS_AMBIGUOUS = 1,
  US_RECOVERY_STATUS_INFEASIBLE = 2,
  US_RECOVERY_STATUS_BUDGET_EXHAUSTED = 3,
} UsRecoveryStatus;

/**
 * Opaque row-major real matrix.
 */
typedef struct UsMatrix UsMatrix;

/**
 * Opaque result of [`us_recover`].
 */
typedef struct UsReport UsReport;

/**
 * Solver settings. `max_nodes == 0` means no budget.
 */
typedef struct UsSolveConfig {
  double residual_tol;
  double uniqueness_tol;
  bool prune;
  bool first_hit;
  uint64_t max_nodes;
} UsSolveConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *us_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *us_last_error_message(void);

/**
 * Default solver settings.
 */
struct UsSolveConfig us_solve_config_default(void);

/**
 * Copies `rows * cols` row-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum UsCode us_matrix_new(size_t rows, size_t cols, const double *data, struct UsMatrix **out);

/**
 * # Safety
 * `m` must be NULL or a handle from this library not yet freed.
 */
void us_matrix_free(struct UsMatrix *m);

/**
 * Row count, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t us_matrix_rows(const struct UsMatrix *m);

/**
 * Column count, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t us_matrix_cols(const struct UsMatrix *m);

/**
 * Copies the row-major entries into `out` (capacity `len`).
 *
 * # Safety
 * `m` must be a live handle; `out` must have room for `len` doubles.
 */
enum UsCode us_matrix_data(const struct UsMatrix *m, double *out, size_t len);

/**
 * Seeded i.i.d. `m x k` matrix.
 *
 * # Safety
 * `out` must be writable.
 */
enum UsCode us_gen_matrix(size_t m,
                          size_t k,
                          enum UsDist dist,
                          uint64_t seed,
                          struct UsMatrix **out);

/**
 * Exact recovery of `x` from the `n` unlabeled values `y`. `cfg` may be NULL
 * for defaults.
 *
 * # Safety
 * `a` must be a live handle, `y` must hold `n` doubles, `out` must be writable.
 */
enum UsCode us_recover(const struct UsMatrix *a,
                       const double *y,
                       size_t n,
                       const struct UsSolveConfig *cfg,
                       struct UsReport **out);

/**
 * # Safety
 * `r` must be NULL or a live report handle.
 */
void us_report_free(struct UsReport *r);

/**
 * # Safety
 * `r` must be a live report handle.
 */
enum UsCode us_report_status(const struct UsReport *r, enum UsRecoveryStatus *out);

/**
 * Number of distinct feasible solutions found.
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
size_t us_report_num_solutions(const struct UsReport *r);

/**
 * Search counters.
 *
 * # Safety
 * `r` must be a live report handle; both outputs must be writable.
 */
enum UsCode us_report_nodes(const struct UsReport *r, uint64_t *explored, uint64_t *pruned);

/**
 * Copies solution `index` (length K) into `out`.
 *
 * # Safety
 * `r` must be a live report handle; `out` must have room for `len` doubles.
 */
enum UsCode us_report_solution(const struct UsReport *r, size_t index, double *out, size_t len);

/**
 * Least-squares recovery from noisy values. Writes `x_hat` (length K), the
 * chosen rows of `a` (length `n`) and the residual.
 *
 * # Safety
 * Pointers must be valid for the given lengths; `residual` must be writable.
 */
enum UsCode us_robust_recover(const struct UsMatrix *a,
                              const double *y,
                              size_t n,
                              double *x_out,
                              size_t x_len,
                              size_t *picks_out,
                              size_t picks_len,
                              double *residual);

/**
 * Distance in `[0, 1]` between the column spans of `m1` and `m2`.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum UsCode us_subspace_distance(const struct UsMatrix *m1, const struct UsMatrix *m2, double *out);

/**
 * For an `N x K` matrix `b` with `2 <= N < 2K`, writes `x != x_hat` (length K)
 * and the cyclic row order `pi` (length N) with `b x = (pi b) x_hat`.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum UsCode us_construct_ambiguous_pair(const struct UsMatrix *b,
                                        double *x_out,
                                        double *x_hat_out,
                                        size_t k,
                                        size_t *pi_out,
                                        size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNLABELED_SENSING_H */
