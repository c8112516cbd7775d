#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_ARGUMENT = 2,
  QD_STATUS_UNPHYSICAL = 3,
  QD_STATUS_NOT_HERMITIAN = 4,
  QD_STATUS_NO_CONVERGENCE = 5,
  QD_STATUS_PANIC = 6,
} QdStatus;

typedef enum QdThermalMode {
  QD_THERMAL_MODE_EXACT = 0,
  QD_THERMAL_MODE_HIGH_T = 1,
} QdThermalMode;

/**
 * A validated two-qubit density matrix.
 */
typedef struct QdDensityMatrix QdDensityMatrix;

/**
 * Result of a thermal sweep over Δ.
 */
typedef struct QdSweep QdSweep;

typedef struct QdCVector {
  double x;
  double y;
  double z;
} QdCVector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qd_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library on this thread.
 */
const char *qd_last_error_message(void);

/**
 * Builds a density matrix from 16 real and 16 imaginary parts, row-major.
 */
enum QdStatus qd_density_matrix_new(const double *re,
                                    const double *im,
                                    struct QdDensityMatrix **out);

enum QdStatus qd_density_matrix_bell_diagonal(struct QdCVector c, struct QdDensityMatrix **out);

/**
 * Thermal state of the XXZ dimer.
 */
enum QdStatus qd_density_matrix_thermal(double j,
                                        double delta,
                                        double t,
                                        enum QdThermalMode mode,
                                        struct QdDensityMatrix **out);

void qd_density_matrix_free(struct QdDensityMatrix *m);

/**
 * Copies the 16 entries, row-major, into `re` and `im`.
 */
enum QdStatus qd_density_matrix_entries(const struct QdDensityMatrix *m, double *re, double *im);

/**
 * Correlation vector and the norm of the non-Bell-diagonal remainder
 * (`residual` may be NULL).
 */
enum QdStatus qd_density_matrix_c_vector(const struct QdDensityMatrix *m,
                                         struct QdCVector *out,
                                         double *residual);

enum QdStatus qd_discord_bell_diagonal(struct QdCVector c, double *out);

/**
 * Discord by numerical optimization over projective measurements on qubit 2.
 */
enum QdStatus qd_discord_oracle(const struct QdDensityMatrix *m, double *out);

enum QdStatus qd_concurrence(const struct QdDensityMatrix *m, double *out);

enum QdStatus qd_entanglement_of_formation(const struct QdDensityMatrix *m, double *out);

enum QdStatus qd_mutual_information(const struct QdDensityMatrix *m, double *out);

enum QdStatus qd_von_neumann_entropy(const struct QdDensityMatrix *m, double *out);

/**
 * Thermal sweep over `delta_min, delta_min + step, …, delta_max`.
 */
enum QdStatus qd_sweep_run(double j,
                           double t,
                           double delta_min,
                           double delta_max,
                           double step,
                           enum QdThermalMode mode,
                           struct QdSweep **out);

void qd_sweep_free(struct QdSweep *s);

/**
 * Number of grid points; 0 for a NULL handle.
 */
uintptr_t qd_sweep_len(const struct QdSweep *s);

/**
 * Grid point `k`. Any output pointer may be NULL.
 */
enum QdStatus qd_sweep_point(const struct QdSweep *s,
                             uintptr_t k,
                             double *delta,
                             struct QdCVector *c,
                             double *discord,
                             double *eof_out);

uintptr_t qd_sweep_sudden_change_count(const struct QdSweep *s);

enum QdStatus qd_sweep_sudden_change(const struct QdSweep *s, uintptr_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
