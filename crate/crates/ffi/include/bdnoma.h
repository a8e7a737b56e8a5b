#ifndef BDNOMA_H
#define BDNOMA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum BdnError {
  BDN_ERROR_OK = 0,
  BDN_ERROR_NULL_POINTER = 1,
  BDN_ERROR_INVALID_ARGUMENT = 2,
  BDN_ERROR_DIMENSION = 3,
  BDN_ERROR_DEAD_BD_LINK = 4,
  BDN_ERROR_NOT_PSD = 5,
  BDN_ERROR_BUFFER_TOO_SMALL = 6,
  BDN_ERROR_PANIC = 7,
} BdnError;

/**
 * Outcome of a solve.
 */
typedef enum BdnSolveStatus {
  BDN_SOLVE_STATUS_CONVERGED = 0,
  BDN_SOLVE_STATUS_MAX_ITERATIONS = 1,
  BDN_SOLVE_STATUS_INFEASIBLE = 2,
  BDN_SOLVE_STATUS_SOLVER_FAILURE = 3,
  BDN_SOLVE_STATUS_RECOVERY_FAILED = 4,
} BdnSolveStatus;

/**
 * One network realization.
 */
typedef struct BdnInstance BdnInstance;

/**
 * Result of a NOMA or OMA solve.
 */
typedef struct BdnReport BdnReport;

/**
 * Rayleigh channel profile; every entry is circularly symmetric Gaussian
 * with the given variance.
 */
typedef struct BdnProfile {
  size_t m;
  double var_h_c;
  double var_h_e;
  double var_h_b;
  double var_h_v;
  double var_g_c;
  double var_g_e;
  double var_g_v;
  double alpha;
  /**
   * Transmit power over noise power, dB.
   */
  double snr_db;
  double epsilon;
} BdnProfile;

typedef struct BdnComplex {
  double re;
  double im;
} BdnComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bdn_last_error_message(void);

/**
 * The library's default channel profile.
 */
struct BdnProfile bdn_profile_default(void);

/**
 * Builds an instance from explicit channels. The four vectors hold `m`
 * entries each.
 */
enum BdnError bdn_instance_new(size_t m,
                               const struct BdnComplex *h_c,
                               const struct BdnComplex *h_e,
                               const struct BdnComplex *h_b,
                               const struct BdnComplex *h_v,
                               struct BdnComplex g_c,
                               struct BdnComplex g_e,
                               struct BdnComplex g_v,
                               double alpha,
                               double sigma2,
                               double power,
                               struct BdnInstance **out);

/**
 * Draws an instance from `profile` with the given seed.
 */
enum BdnError bdn_instance_sample(const struct BdnProfile *profile,
                                  uint64_t seed,
                                  struct BdnInstance **out);

/**
 * Number of BS antennas; 0 for a null handle.
 */
size_t bdn_instance_antennas(const struct BdnInstance *inst);

void bdn_instance_free(struct BdnInstance *inst);

/**
 * Maximizes the outage secrecy rate with NOMA beams. `seed` drives the
 * randomized rank-one recovery.
 */
enum BdnError bdn_solve_noma(const struct BdnInstance *inst,
                             double r_c,
                             double r_e,
                             double epsilon,
                             uint64_t seed,
                             struct BdnReport **out);

/**
 * Same problem under the two-slot OMA baseline.
 */
enum BdnError bdn_solve_oma(const struct BdnInstance *inst,
                            double r_c,
                            double r_e,
                            double epsilon,
                            uint64_t seed,
                            struct BdnReport **out);

enum BdnError bdn_report_status(const struct BdnReport *report, enum BdnSolveStatus *out);

/**
 * Certified rate in bits/s/Hz (0 unless the status is a success).
 */
enum BdnError bdn_report_r_b(const struct BdnReport *report, double *out);

enum BdnError bdn_report_iterations(const struct BdnReport *report, size_t *out);

/**
 * Copies both beams into caller buffers of `len` entries each. Fails with
 * [`BdnError::BufferTooSmall`] when `len` is below the antenna count.
 */
enum BdnError bdn_report_beams(const struct BdnReport *report,
                               struct BdnComplex *w_c,
                               struct BdnComplex *w_e,
                               size_t len);

void bdn_report_free(struct BdnReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDNOMA_H */
