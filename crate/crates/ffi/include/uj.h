#ifndef UJ_H
#define UJ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UjStatus {
  UJ_STATUS_OK = 0,
  UJ_STATUS_NULL_POINTER = 1,
  /**
   * Input fails validation (shape, Hermiticity, spectrum, normalization).
   */
  UJ_STATUS_INVALID_INPUT = 2,
  UJ_STATUS_DIMENSION_MISMATCH = 3,
  UJ_STATUS_INVALID_LAMBDA = 4,
  UJ_STATUS_LAMBDA_TOO_LARGE = 5,
  UJ_STATUS_NON_CONVERGENCE = 6,
  UJ_STATUS_SELF_CHECK_FAILED = 7,
  /**
   * A Rust panic was caught; the library state is unaffected.
   */
  UJ_STATUS_INTERNAL = 8,
} UjStatus;

typedef enum UjVerdict {
  UJ_VERDICT_FEASIBLE = 0,
  UJ_VERDICT_INFEASIBLE = 1,
  UJ_VERDICT_UNDETERMINED = 2,
} UjVerdict;

/**
 * Four-outcome joint observable.
 */
typedef struct UjJoint UjJoint;

/**
 * Complex square matrix.
 */
typedef struct UjMatrix UjMatrix;

/**
 * Two-outcome observable.
 */
typedef struct UjObservable UjObservable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *uj_last_error(void);

const char *uj_version(void);

/**
 * # Safety
 * `re` (and `im` unless null) must point to `dim * dim` doubles.
 */
enum UjStatus uj_matrix_new(size_t dim, const double *re, const double *im, struct UjMatrix **out);

/**
 * # Safety
 * `m` must come from this library and not be freed already; null is ignored.
 */
void uj_matrix_free(struct UjMatrix *m);

/**
 * # Safety
 * `m` must be a live handle or null.
 */
size_t uj_matrix_dim(const struct UjMatrix *m);

/**
 * Copies the entries out in row-major order.
 *
 * # Safety
 * `re` and `im` (each nullable) must have room for `dim * dim` doubles.
 */
enum UjStatus uj_matrix_copy(const struct UjMatrix *m, double *re, double *im);

/**
 * Observable `{E, I - E}` from an effect.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_observable_from_effect(const struct UjMatrix *yes, struct UjObservable **out);

/**
 * # Safety
 * `o` must come from this library and not be freed already; null is ignored.
 */
void uj_observable_free(struct UjObservable *o);

/**
 * Copy of the yes-effect.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_observable_yes(const struct UjObservable *o, struct UjMatrix **out);

/**
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_smear(const struct UjObservable *o, double lambda, struct UjObservable **out);

/**
 * Mean value of the smeared observable in state `rho`.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_smeared_mean(const struct UjObservable *o,
                              const struct UjMatrix *rho,
                              double lambda,
                              double *out);

/**
 * Joint measurability of the two observables smeared by `lambda`.
 *
 * With `use_oracle` zero the constructive route is used; otherwise the
 * numerical oracle with `max_iter` and `tol`. `joint` may be null; when not
 * null it receives the witness, or null if there is none.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_jointly_measurable(const struct UjObservable *o1,
                                    const struct UjObservable *o2,
                                    double lambda,
                                    int32_t use_oracle,
                                    size_t max_iter,
                                    double tol,
                                    enum UjVerdict *verdict,
                                    struct UjJoint **joint);

/**
 * # Safety
 * `j` must come from this library and not be freed already; null is ignored.
 */
void uj_joint_free(struct UjJoint *j);

/**
 * Effect `G_jk` for outcome signs `j, k` in `{+1, -1}`.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_joint_effect(const struct UjJoint *j,
                              int32_t sj,
                              int32_t sk,
                              struct UjMatrix **out);

/**
 * `|<A1 B1> + <A1 B2> + <A2 B1> - <A2 B2>|`, with Alice's observables
 * smeared by `lambda` (pass 1 for sharp).
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_chsh(const struct UjMatrix *rho,
                      const struct UjObservable *a1,
                      const struct UjObservable *a2,
                      const struct UjObservable *b1,
                      const struct UjObservable *b2,
                      double lambda,
                      double *out);

/**
 * Neumark projector on `C^d (x) C^2`, ancilla last.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_dilate(const struct UjObservable *o, struct UjMatrix **out);

/**
 * `<0|G|0>` on the ancilla.
 *
 * # Safety
 * Pointers must be live handles / writable.
 */
enum UjStatus uj_compress(const struct UjMatrix *g, struct UjMatrix **out);

/**
 * Threshold unsharpness for the qubit pair along Bloch vectors `m`, `n`.
 *
 * # Safety
 * `m` and `n` must point to three doubles; `out` must be writable.
 */
enum UjStatus uj_lambda_opt_qubit(const double *m, const double *n, double tol, double *out);

/**
 * Minimum threshold over a Fibonacci mesh of qubit pairs.
 *
 * # Safety
 * `out` must be writable.
 */
enum UjStatus uj_lambda_opt_worst_case(size_t mesh, uint64_t seed, double tol, double *out);

/**
 * CHSH of a box given as `p[((x*2 + y)*2 + a)*2 + b]`, settings `x, y` and
 * outcomes `a, b` indexed from 0 with outcome 0 meaning `+1`.
 *
 * # Safety
 * `p` must point to 16 doubles; `out` must be writable.
 */
enum UjStatus uj_box_chsh(const double *p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UJ_H */
