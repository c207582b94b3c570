#ifndef GSLAB_H
#define GSLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Kernel piece selector; `Full` is the undecomposed kernel.
 */
typedef enum GslabPiece {
  GSLAB_PIECE_FULL = 0,
  GSLAB_PIECE_T1 = 1,
  GSLAB_PIECE_T2 = 2,
  GSLAB_PIECE_T3 = 3,
  GSLAB_PIECE_T4 = 4,
  GSLAB_PIECE_T5 = 5,
  GSLAB_PIECE_T6 = 6,
} GslabPiece;

/**
 * Result codes.
 */
typedef enum GslabStatus {
  GSLAB_STATUS_OK = 0,
  GSLAB_STATUS_DOMAIN = 1,
  GSLAB_STATUS_OVERFLOW = 2,
  GSLAB_STATUS_NON_CONVERGENCE = 3,
  GSLAB_STATUS_HYPOTHESIS = 4,
  GSLAB_STATUS_CONFIG = 5,
  GSLAB_STATUS_INPUT = 6,
  GSLAB_STATUS_DIMENSION_MISMATCH = 7,
  GSLAB_STATUS_IO = 8,
  GSLAB_STATUS_NULL_POINTER = 9,
  GSLAB_STATUS_PANIC = 10,
} GslabStatus;

/**
 * Opaque discrete operator `K[j, i]` on an r-grid × s-grid.
 */
typedef struct GslabOperator GslabOperator;

/**
 * Grid resolution for operator construction and norm estimates.
 */
typedef struct GslabGrids {
  size_t r_points;
  size_t s_order;
  size_t t_points;
} GslabGrids;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to `len` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gslab_last_error_message(char *buf, size_t len);

/**
 * `J_ν(x)` for `ν = two_nu / 2` with an absolute error bound.
 *
 * # Safety
 * `value` must be valid for writes; `err_bound` may be null.
 */
enum GslabStatus gslab_bessel_j(uint32_t two_nu, double x, double *value, double *err_bound);

/**
 * Builds the discretized kernel of `piece` on `I = [lo, hi]` with `t ≡ 0`.
 *
 * # Safety
 * `handle` must be valid for writes. Release the result with [`gslab_operator_free`].
 */
enum GslabStatus gslab_operator_build(enum GslabPiece piece,
                                      uint32_t two_nu,
                                      double lo,
                                      double hi,
                                      double alpha,
                                      struct GslabGrids grid,
                                      struct GslabOperator **handle);

/**
 * Releases an operator; null is ignored.
 *
 * # Safety
 * `op` must come from [`gslab_operator_build`] and not be used afterwards.
 */
void gslab_operator_free(struct GslabOperator *op);

/**
 * Row and column counts.
 *
 * # Safety
 * `op` must be a live handle; `rows` and `cols` valid for writes.
 */
enum GslabStatus gslab_operator_dims(const struct GslabOperator *op, size_t *rows, size_t *cols);

/**
 * `y = K g` with complex vectors stored as interleaved `(re, im)` pairs:
 * `g` has `2·cols` doubles, `y` receives `2·rows`.
 *
 * # Safety
 * `g` must hold `2·g_len_complex` doubles and `y` have room for `2·rows`.
 */
enum GslabStatus gslab_operator_apply(const struct GslabOperator *op,
                                      const double *g,
                                      size_t g_len_complex,
                                      double *y,
                                      size_t y_len_complex);

/**
 * Schur upper bound for `‖K‖²` between the weighted ℓ² spaces.
 *
 * # Safety
 * `op` must be a live handle; `bound` valid for writes.
 */
enum GslabStatus gslab_operator_schur_bound(const struct GslabOperator *op, double *bound);

/**
 * Largest singular value by seeded power iteration.
 *
 * # Safety
 * `op` must be a live handle; `sigma` valid for writes.
 */
enum GslabStatus gslab_operator_norm(const struct GslabOperator *op, uint64_t seed, double *sigma);

/**
 * Lower bound for the maximal operator norm of `piece` on `I = [lo, hi]`,
 * maximizing over data and per-row times.
 *
 * # Safety
 * `lower_bound` must be valid for writes.
 */
enum GslabStatus gslab_norm_lower(enum GslabPiece piece,
                                  uint32_t two_nu,
                                  double lo,
                                  double hi,
                                  double alpha,
                                  struct GslabGrids grid,
                                  size_t rounds,
                                  uint64_t seed,
                                  double *lower_bound);

/**
 * Maximal ratio `Σ_j max_t |Q_ν^t g(r_j)|² ρ_j / ∫ |g|² s^{1/2}` for samples
 * `g(s_k) = re[k] + i·im[k]` (trapezoidal weights), `r_points` midpoints of
 * `(0, 1]` and the given times.
 *
 * # Safety
 * `s`, `re`, `im` must hold `n` doubles, `t` must hold `nt`; `ratio` valid for writes.
 */
enum GslabStatus gslab_q_star_ratio(uint32_t two_nu,
                                    const double *s,
                                    const double *re,
                                    const double *im,
                                    size_t n,
                                    const double *t,
                                    size_t nt,
                                    size_t r_points,
                                    double *ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSLAB_H */
