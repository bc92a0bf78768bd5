#ifndef FRACSPEC_H
#define FRACSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FracspecStatus {
  FRACSPEC_STATUS_OK = 0,
  FRACSPEC_STATUS_NULL_POINTER = 1,
  FRACSPEC_STATUS_INVALID_ARGUMENT = 2,
  FRACSPEC_STATUS_LENGTH_MISMATCH = 3,
  FRACSPEC_STATUS_NUMERICAL = 4,
  FRACSPEC_STATUS_PANIC = 5,
} FracspecStatus;

// A diagonalized operator.
typedef struct FracspecOperator FracspecOperator;

// Grid and coefficient description. `boundary`: 0 Dirichlet, 1 periodic.
// `coefficients`: 0 identity, 1 isotropic radial bump `I + scale·exp(-|x|²/width²)·I`.
typedef struct FracspecProblem {
  uint32_t dim;
  uint32_t n;
  double half_length;
  uint32_t boundary;
  uint32_t coefficients;
  double bump_scale;
  double bump_width;
} FracspecProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Assembles and diagonalizes the operator. Release it with [`fracspec_operator_free`].
//
// # Safety
// `spec` must point to a valid `FracspecProblem`; `out` must be writable.
enum FracspecStatus fracspec_operator_new(const struct FracspecProblem *spec,
                                          struct FracspecOperator **out);

// # Safety
// `op` must come from [`fracspec_operator_new`] and not be used afterwards. Null is ignored.
void fracspec_operator_free(struct FracspecOperator *op);

// # Safety
// `op` must be a live handle; `out` must be writable.
enum FracspecStatus fracspec_operator_dof_count(const struct FracspecOperator *op, size_t *out);

// Eigenvalues in ascending order.
//
// # Safety
// `op` must be a live handle; `out` must hold `len` doubles.
enum FracspecStatus fracspec_operator_eigenvalues(const struct FracspecOperator *op,
                                                  double *out,
                                                  size_t len);

// `out = L^alpha f`, `alpha >= 0`.
//
// # Safety
// `op` must be a live handle; `f` and `out` must hold `len` doubles and may not overlap.
enum FracspecStatus fracspec_fractional_power(const struct FracspecOperator *op,
                                              double alpha,
                                              const double *f,
                                              double *out,
                                              size_t len);

// `out = exp(i t L^alpha) f` with real and imaginary parts in separate arrays.
//
// # Safety
// `op` must be a live handle; all four arrays must hold `len` doubles.
enum FracspecStatus fracspec_unitary_propagate(const struct FracspecOperator *op,
                                               double alpha,
                                               double t,
                                               const double *f_re,
                                               const double *f_im,
                                               double *out_re,
                                               double *out_im,
                                               size_t len);

// Extends `u` at the default resolution and recovers `L^alpha u` from the weighted normal
// derivative at `y = 0`, `0 < alpha < 1`.
//
// # Safety
// `op` must be a live handle; `u` and `out` must hold `len` doubles.
enum FracspecStatus fracspec_conormal_recover(const struct FracspecOperator *op,
                                              double alpha,
                                              const double *u,
                                              double *out,
                                              size_t len);

// `‖L^alpha f‖ on Θ / ‖L^alpha f‖` for the standard bump `f` on `[1, 2]^n` and
// `Θ = (-1, 0)^n`, `0 < alpha < 1`.
//
// # Safety
// `op` must be a live handle; `ratio` must be writable.
enum FracspecStatus fracspec_nonlocality_probe(const struct FracspecOperator *op,
                                               double alpha,
                                               double *ratio);

// Message of the last failed call on this thread, empty after a successful one. The
// pointer stays valid until the next call on the same thread.
const char *fracspec_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACSPEC_H */
