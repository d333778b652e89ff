/* C interface to the sgmrd streaming subspace search engine. */

#ifndef SGMRD_H
#define SGMRD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SgmrdStatus {
  SgmrdStatus_Ok = 0,
  /**
   * Invalid arguments or configuration.
   */
  SgmrdStatus_Usage = 1,
  /**
   * Malformed or insufficient data.
   */
  SgmrdStatus_Data = 2,
  /**
   * A failed internal invariant (a bug).
   */
  SgmrdStatus_Internal = 3,
} SgmrdStatus;

/**
 * Streaming subspace monitor handle.
 */
typedef struct SgmrdEngine SgmrdEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library as a static NUL-terminated string.
 */
const char *sgmrd_version(void);

/**
 * Copies the last error message of this thread into `buffer` (truncated to
 * `capacity` bytes including the terminator) and returns the full message
 * length. Call with a null buffer to query the length.
 *
 * # Safety
 * `buffer` must point to at least `capacity` writable bytes, or be null.
 */
uintptr_t sgmrd_last_error(char *buffer, uintptr_t capacity);

/**
 * Creates an engine for a `dims`-dimensional stream.
 *
 * `policy` is one of `ts`, `rd`, `gd`, `batch`, `init`, `gold`. Returns null
 * on error; see [`sgmrd_last_error`].
 *
 * # Safety
 * `policy` must be a NUL-terminated string.
 */
struct SgmrdEngine *sgmrd_engine_new(uintptr_t dims,
                                     uintptr_t window_size,
                                     uintptr_t step_size,
                                     uintptr_t plays,
                                     double gamma,
                                     uintptr_t iterations,
                                     double slice_mass,
                                     const char *policy,
                                     bool monitor_every_step,
                                     uint64_t seed);

/**
 * Releases an engine. Null is allowed.
 *
 * # Safety
 * `engine` must come from [`sgmrd_engine_new`] and not have been freed.
 */
void sgmrd_engine_free(struct SgmrdEngine *engine);

/**
 * Feeds one observation of `dims` values. `stepped`, when non-null, is set
 * to true once the window is full and the engine state advanced.
 *
 * # Safety
 * `engine` must be a live handle; `values` must point to `len` doubles.
 */
enum SgmrdStatus sgmrd_engine_push(struct SgmrdEngine *engine,
                                   const double *values,
                                   uintptr_t len,
                                   bool *stepped);

/**
 * Number of observations ingested so far.
 *
 * # Safety
 * `engine` must be a live handle.
 */
uint64_t sgmrd_engine_time(const struct SgmrdEngine *engine);

/**
 * Stream dimensionality.
 *
 * # Safety
 * `engine` must be a live handle.
 */
uintptr_t sgmrd_engine_dims(const struct SgmrdEngine *engine);

/**
 * Total quality estimates spent so far.
 *
 * # Safety
 * `engine` must be a live handle.
 */
uint64_t sgmrd_engine_evaluations(const struct SgmrdEngine *engine);

/**
 * Smoothed quality of the subspace monitored for `dim`. Fails with `Data`
 * before the first window has filled.
 *
 * # Safety
 * `engine` must be a live handle; `quality` must be writable.
 */
enum SgmrdStatus sgmrd_engine_quality(const struct SgmrdEngine *engine,
                                      uintptr_t dim,
                                      double *quality);

/**
 * Copies the dimensions of the subspace monitored for `dim` into `buffer`
 * and stores the subspace size in `len`. At most `capacity` entries are
 * written; a larger subspace fails with `Usage` (query `len` first by
 * passing a null buffer). Fails with `Data` before the window has filled.
 *
 * # Safety
 * `engine` must be a live handle; `buffer` must hold `capacity` entries or
 * be null; `len` must be writable.
 */
enum SgmrdStatus sgmrd_engine_subspace(const struct SgmrdEngine *engine,
                                       uintptr_t dim,
                                       uintptr_t *buffer,
                                       uintptr_t capacity,
                                       uintptr_t *len);

/**
 * True when the last successful push advanced the engine (window full).
 *
 * # Safety
 * `engine` must be a live handle.
 */
bool sgmrd_engine_ready(const struct SgmrdEngine *engine);

/**
 * LOF scores of `n` points with `m` dimensions, row-major in `points`,
 * written to `scores` (length `n`).
 *
 * # Safety
 * `points` must hold `n * m` doubles and `scores` `n` writable doubles.
 */
enum SgmrdStatus sgmrd_lof(const double *points,
                           uintptr_t n,
                           uintptr_t m,
                           uintptr_t k,
                           double *scores);

/**
 * Two-sample Kolmogorov-Smirnov p-value. Inputs need not be sorted.
 *
 * # Safety
 * `a` must hold `len_a` doubles, `b` `len_b` doubles, `p` one writable
 * double.
 */
enum SgmrdStatus sgmrd_ks_pvalue(const double *a,
                                 uintptr_t len_a,
                                 const double *b,
                                 uintptr_t len_b,
                                 double *p);

/**
 * Generates a drift benchmark and writes the dataset CSV to `csv_path` and,
 * unless null, the ground truth JSON to `truth_path`. A negative
 * `outlier_prob` selects the calibrated default.
 *
 * # Safety
 * The paths must be NUL-terminated strings.
 */
enum SgmrdStatus sgmrd_generate_csv(uintptr_t dims,
                                    uintptr_t phases,
                                    uintptr_t per_phase,
                                    double outlier_prob,
                                    uintptr_t max_subspace_dim,
                                    uint64_t seed,
                                    const char *csv_path,
                                    const char *truth_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGMRD_H */
