#ifndef NOMA_HARQ_H
#define NOMA_HARQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible entry point.
typedef enum NhStatus {
  NH_STATUS_OK = 0,
  NH_STATUS_NULL_POINTER = 1,
  // Argument outside the operation's domain.
  NH_STATUS_DOMAIN = 2,
  // Parameters violate a system invariant.
  NH_STATUS_VALIDATION = 3,
  // Work budget exceeded.
  NH_STATUS_RESOURCE = 4,
  NH_STATUS_IO = 5,
  NH_STATUS_JSON = 6,
  // Non-UTF-8 string argument.
  NH_STATUS_ENCODING = 7,
  // A Rust panic was caught at the boundary.
  NH_STATUS_INTERNAL = 8,
} NhStatus;

// Which outage event a simulation estimates.
typedef enum NhEvent {
  NH_EVENT_NOMA_USER1 = 0,
  NH_EVENT_NOMA_USER2 = 1,
  NH_EVENT_OMA_USER1 = 2,
  NH_EVENT_OMA_USER2 = 3,
} NhEvent;

// Opaque validated system configuration.
typedef struct NhConfig NhConfig;

// Opaque quadrature rule (Chebyshev nodes and Stehfest weights).
typedef struct NhQuadrature NhQuadrature;

// Plain parameter block for [`nh_config_new`]. `rho` is linear.
typedef struct NhParams {
  double alpha1;
  double alpha2;
  double rho;
  double d1;
  double d2;
  double zeta;
  double rate1;
  double rate2;
} NhParams;

// Monte Carlo estimate with its standard error and 95% Wilson interval.
typedef struct NhEstimate {
  double p_hat;
  uint64_t trials;
  double std_err;
  double ci95_lo;
  double ci95_hi;
} NhEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *nh_last_error(void);

// Library version as a static NUL-terminated string.
const char *nh_version(void);

// Validates `params` and stores a new handle in `*out`.
//
// # Safety
// `out` must be valid for writes.
enum NhStatus nh_config_new(struct NhParams params, struct NhConfig **out);

// Parses a JSON configuration document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for writes.
enum NhStatus nh_config_from_json(const char *json, struct NhConfig **out);

// Copy of `cfg` at another linear SNR.
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum NhStatus nh_config_with_rho(const struct NhConfig *cfg, double rho, struct NhConfig **out);

// Writes the validated parameters and the derived mean channel gains.
//
// # Safety
// `cfg` must be a live handle; the out pointers must be valid for writes.
enum NhStatus nh_config_params(const struct NhConfig *cfg,
                               struct NhParams *out,
                               double *lambda1,
                               double *lambda2);

// Releases a configuration handle. Null is a no-op.
//
// # Safety
// `cfg` must be null or a handle not yet freed.
void nh_config_free(struct NhConfig *cfg);

// Quadrature rule with `n_nodes` Chebyshev nodes and `l_terms` Stehfest
// terms (even, at most 18).
//
// # Safety
// `out` must be valid for writes.
enum NhStatus nh_quadrature_new(size_t n_nodes, size_t l_terms, struct NhQuadrature **out);

// # Safety
// `quad` must be null or a handle not yet freed.
void nh_quadrature_free(struct NhQuadrature *quad);

// Single-round SINR CDF of `user` (1 or 2) at `y`.
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum NhStatus nh_cdf_sinr_single(const struct NhConfig *cfg, uint32_t user, double y, double *out);

// User 1's outage after `t_rounds` combined rounds from the transform
// series. `quad` may be null for the default 20-node, 10-term rule.
// Nonzero `literal` evaluates the uncorrected variant with the extra `1/r`.
//
// # Safety
// `cfg` must be a live handle, `quad` null or live, `out` valid for writes.
enum NhStatus nh_outage_user1(const struct NhConfig *cfg,
                              const struct NhQuadrature *quad,
                              uint32_t t_rounds,
                              bool literal,
                              double *out);

// User 2's high-SNR outage approximation and its validity flag.
//
// # Safety
// `cfg` must be a live handle; the out pointers must be valid for writes.
enum NhStatus nh_outage_user2_highsnr(const struct NhConfig *cfg,
                                      uint32_t t_rounds,
                                      double *out,
                                      bool *valid);

// OMA outage of `user` after `t_rounds` combined rounds.
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum NhStatus nh_outage_oma(const struct NhConfig *cfg,
                            uint32_t user,
                            uint32_t t_rounds,
                            double *out);

// Monte Carlo estimate of `event` over `trials` independent packets.
// Deterministic in `seed` regardless of thread count.
//
// # Safety
// `cfg` must be a live handle; `out` must be valid for writes.
enum NhStatus nh_simulate_outage(const struct NhConfig *cfg,
                                 enum NhEvent event,
                                 uint32_t t_rounds,
                                 uint64_t trials,
                                 uint64_t seed,
                                 struct NhEstimate *out);

// Largest user-2 power share for which NOMA beats OMA after `t_rounds`.
double nh_alpha2_threshold(uint32_t t_rounds, double rate2);

// `K(T) = (2^(T R2) - 1)/alpha2 - 2^(2 T R2) + 1`; negative means NOMA
// wins for user 2 at high SNR.
double nh_k_function(uint32_t t_rounds, double alpha2, double rate2);

// Smallest round count with `K < 0`; with `allow_tie`, `K <= 0`. Returns 0
// when `alpha2` or `rate2` is out of range.
uint32_t nh_min_rounds(double alpha2, double rate2, bool allow_tie);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOMA_HARQ_H */
