/* Generated by cbindgen. Do not edit. */

#ifndef SPCA_H
#define SPCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpcaFileFormat {
  // Guess from the extension.
  SPCA_FILE_FORMAT_AUTO = 0,
  SPCA_FILE_FORMAT_MATRIX_MARKET = 1,
  SPCA_FILE_FORMAT_CSV = 2,
  SPCA_FILE_FORMAT_CSV_WITH_HEADER = 3,
} SpcaFileFormat;

// Terminal state of a single run.
typedef enum SpcaRunStatus {
  SPCA_RUN_STATUS_CONVERGED = 0,
  SPCA_RUN_STATUS_MAX_ITERATIONS = 1,
  SPCA_RUN_STATUS_DEGENERATE = 2,
  SPCA_RUN_STATUS_ZERO_LOADING = 3,
} SpcaRunStatus;

// Result code of every call.
typedef enum SpcaStatus {
  SPCA_STATUS_OK = 0,
  SPCA_STATUS_NULL_POINTER = 1,
  SPCA_STATUS_INVALID_ARGUMENT = 2,
  SPCA_STATUS_IO = 3,
  SPCA_STATUS_PARSE = 4,
  // The input cannot support a loading (e.g. an all-zero matrix).
  SPCA_STATUS_DEGENERATE = 5,
  // Output buffer shorter than required; nothing was written.
  SPCA_STATUS_BUFFER_TOO_SMALL = 6,
  // A Rust panic was caught at the boundary.
  SPCA_STATUS_PANIC = 7,
} SpcaStatus;

typedef enum SpcaStrategy {
  SPCA_STRATEGY_NAI = 0,
  SPCA_STRATEGY_SFA = 1,
  SPCA_STRATEGY_BAT = 2,
  SPCA_STRATEGY_OTF = 3,
} SpcaStrategy;

// Opaque data matrix.
typedef struct SpcaMatrix SpcaMatrix;

// Opaque multistart result.
typedef struct SpcaReport SpcaReport;

// Solve parameters. Fill with [`spca_solve_options_default`] and override.
typedef struct SpcaSolveOptions {
  // Formulation row, 1 to 8.
  uint32_t formulation;
  // Sparsity level `s` for constrained rows, penalty `gamma` otherwise.
  double param;
  size_t starts;
  // An `SpcaStrategy` value.
  uint32_t strategy;
  // Block width; 0 selects `min(16, starts)`.
  size_t batch;
  uint64_t seed;
  double tol;
  size_t max_iterations;
  // Nonzero draws starts from canonical basis vectors instead of the sphere.
  uint8_t column_starts;
} SpcaSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *spca_last_error_message(void);

// Builds a dense `n x p` matrix from `n * p` column-major values.
//
// # Safety
// `values` must point to `n * p` readable doubles; `out` must be writable.
enum SpcaStatus spca_matrix_from_dense(size_t n,
                                       size_t p,
                                       const double *values,
                                       struct SpcaMatrix **out);

// Builds a sparse matrix from compressed sparse column arrays
// (`col_ptr` has `p + 1` entries, `row_idx` and `values` have `col_ptr[p]`).
//
// # Safety
// All arrays must be readable for the lengths above; `out` must be writable.
enum SpcaStatus spca_matrix_from_csc(size_t n,
                                     size_t p,
                                     const size_t *col_ptr,
                                     const size_t *row_idx,
                                     const double *values,
                                     struct SpcaMatrix **out);

// Reads a MatrixMarket or CSV file. `format` is an `SpcaFileFormat` value.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum SpcaStatus spca_matrix_load(const char *path, uint32_t format, struct SpcaMatrix **out);

// Replaces the matrix with its column-centered copy (densifies sparse input).
//
// # Safety
// `m` must be a live handle.
enum SpcaStatus spca_matrix_center(struct SpcaMatrix *m);

// # Safety
// `m` must be a live handle; `n`, `p` and `nnz` may each be null.
enum SpcaStatus spca_matrix_dims(const struct SpcaMatrix *m, size_t *n, size_t *p, size_t *nnz);

// # Safety
// `m` must be null or a handle not yet freed.
void spca_matrix_free(struct SpcaMatrix *m);

// Defaults: row 1 with `s = 1`, 64 starts, OTF, width 16, seed 0,
// `tol = 1e-6`, 200 iterations, sphere starts.
//
// # Safety
// `out` must be writable.
enum SpcaStatus spca_solve_options_default(struct SpcaSolveOptions *out);

// Runs the multistart solver. Individual runs that end degenerate or with a
// zero loading are reported through the report, not the return code.
//
// # Safety
// `m` must be a live handle, `options` readable and `out` writable.
enum SpcaStatus spca_solve(const struct SpcaMatrix *m,
                           const struct SpcaSolveOptions *options,
                           struct SpcaReport **out);

// # Safety
// `r` must be a live handle and `out` writable.
enum SpcaStatus spca_report_best_objective(const struct SpcaReport *r, double *out);

// Copies the best loading into `buf`, which must hold at least `p` doubles.
//
// # Safety
// `r` must be a live handle and `buf` writable for `len` doubles.
enum SpcaStatus spca_report_best_loading(const struct SpcaReport *r, double *buf, size_t len);

// # Safety
// `r` must be a live handle; output pointers may be null.
enum SpcaStatus spca_report_best_run(const struct SpcaReport *r,
                                     size_t *start_index,
                                     size_t *iterations,
                                     enum SpcaRunStatus *status);

// Number of starts, i.e. valid indices for [`spca_report_start`].
//
// # Safety
// `r` must be a live handle and `out` writable.
enum SpcaStatus spca_report_start_count(const struct SpcaReport *r, size_t *out);

// Objective, iteration count and status of start `index`.
//
// # Safety
// `r` must be a live handle; output pointers may be null.
enum SpcaStatus spca_report_start(const struct SpcaReport *r,
                                  size_t index,
                                  double *objective,
                                  size_t *iterations,
                                  enum SpcaRunStatus *status);

// Block sweeps and wall time (seconds) of the whole campaign.
//
// # Safety
// `r` must be a live handle; output pointers may be null.
enum SpcaStatus spca_report_cost(const struct SpcaReport *r,
                                 size_t *total_sweeps,
                                 size_t *column_iterations,
                                 double *wall_time);

// # Safety
// `r` must be null or a handle not yet freed.
void spca_report_free(struct SpcaReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPCA_H */
