#ifndef BDLAB_H
#define BDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BdStatus {
  BD_STATUS_OK = 0,
  BD_STATUS_NULL_POINTER = 1,
  BD_STATUS_INVALID_ARGUMENT = 2,
  BD_STATUS_CONFIG = 3,
  BD_STATUS_NUMERICAL = 4,
  BD_STATUS_IO = 5,
  BD_STATUS_CERTIFICATE_VIOLATED = 6,
  BD_STATUS_ABSORBING = 7,
  BD_STATUS_PANIC = 8,
} BdStatus;

typedef struct BdDomain BdDomain;

typedef struct BdKernel BdKernel;

typedef struct BdModel BdModel;

typedef struct BdTrajectory BdTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *bd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bd_version(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_domain_new(size_t dim, double edge, size_t points, struct BdDomain **out);

/**
 * # Safety
 * `domain` must be null or come from [`bd_domain_new`].
 */
void bd_domain_free(struct BdDomain *domain);

/**
 * Number of grid points, `points^dim`, or 0 for a null handle.
 *
 * # Safety
 * `domain` must be null or a live handle.
 */
size_t bd_domain_len(const struct BdDomain *domain);

/**
 * `amplitude` times the indicator of the ball of `radius`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_kernel_ball(double amplitude, double radius, size_t dim, struct BdKernel **out);

/**
 * `amplitude * exp(-r^2 / (2 sigma^2))`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_kernel_gaussian(double amplitude, double sigma, size_t dim, struct BdKernel **out);

/**
 * Gaussian normalized to total `mass`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_kernel_gaussian_mass(double mass, double sigma, size_t dim, struct BdKernel **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_kernel_zero(size_t dim, struct BdKernel **out);

/**
 * Total mass of the continuum kernel.
 *
 * # Safety
 * `kernel` must be a live handle and `out` a valid pointer.
 */
enum BdStatus bd_kernel_mass(const struct BdKernel *kernel, double *out);

/**
 * # Safety
 * `kernel` must be null or come from a `bd_kernel_*` constructor.
 */
void bd_kernel_free(struct BdKernel *kernel);

/**
 * Model with mortality `m`, dispersal `a_plus` and competition `a_minus`,
 * discretized on `domain`. The kernels and domain are copied.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum BdStatus bd_model_new(double mortality,
                           const struct BdKernel *a_plus,
                           const struct BdKernel *a_minus,
                           const struct BdDomain *domain,
                           struct BdModel **out);

/**
 * # Safety
 * `model` must be null or come from [`bd_model_new`].
 */
void bd_model_free(struct BdModel *model);

/**
 * Carrying capacity `(<a+> - m) / <a->` of the grid model; NaN when undefined.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BdStatus bd_model_carrying_capacity(const struct BdModel *model, double *out);

/**
 * Homogeneous solution of the kinetic equation started at `psi0`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BdStatus bd_bernoulli_exact(double psi0,
                                 double mortality,
                                 double plus_mass,
                                 double minus_mass,
                                 double t,
                                 double *out);

/**
 * Integrate the kinetic equation from `rho0` (length `bd_domain_len`).
 *
 * # Safety
 * `model` must be live, `rho0` must hold `len` values and `out` must be valid.
 */
enum BdStatus bd_kinetic_integrate(const struct BdModel *model,
                                   const double *rho0,
                                   size_t len,
                                   double t_end,
                                   double dt,
                                   size_t output_every,
                                   struct BdTrajectory **out);

/**
 * Number of stored frames, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t bd_trajectory_frames(const struct BdTrajectory *traj);

/**
 * Time and field of frame `frame`; `values` must hold `len` = grid-size doubles.
 *
 * # Safety
 * `traj` must be live, `time` valid, and `values` writable for `len` doubles.
 */
enum BdStatus bd_trajectory_frame(const struct BdTrajectory *traj,
                                  size_t frame,
                                  double *time,
                                  double *values,
                                  size_t len);

/**
 * # Safety
 * `traj` must be null or come from [`bd_kinetic_integrate`].
 */
void bd_trajectory_free(struct BdTrajectory *traj);

/**
 * Ensemble-mean population at each of `n_times` increasing `times`,
 * from Poisson(`rho0`) starts; writes `n_times` values to `means`.
 *
 * # Safety
 * `model` must be live; `rho0` holds `len` values; `times` and `means` hold `n_times`.
 */
enum BdStatus bd_ensemble_mean_population(const struct BdModel *model,
                                          const double *rho0,
                                          size_t len,
                                          const double *times,
                                          size_t n_times,
                                          size_t n_runs,
                                          uint64_t seed,
                                          double *means);

/**
 * Run a TOML experiment config. `output_dir` may be null to use the config's.
 * Sets `*violated` to 1 when a certificate failed, and returns
 * [`BdStatus::CertificateViolated`] in that case.
 *
 * # Safety
 * Strings must be NUL-terminated; `violated` may be null.
 */
enum BdStatus bd_run_config(const char *path, const char *output_dir, int *violated);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDLAB_H */
