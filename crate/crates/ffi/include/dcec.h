#ifndef DCEC_H
#define DCEC_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcecStatus {
  DCEC_STATUS_OK = 0,
  DCEC_STATUS_NULL_POINTER = 1,
  DCEC_STATUS_INVALID_PARAMETER = 2,
  DCEC_STATUS_CONFIG = 3,
  DCEC_STATUS_IO = 4,
  DCEC_STATUS_NUMERIC = 5,
  DCEC_STATUS_PANIC = 6,
} DcecStatus;

typedef enum DcecPolicy {
  DCEC_POLICY_DCEC = 0,
  DCEC_POLICY_MPC = 1,
} DcecPolicy;

// Opaque scenario handle.
typedef struct DcecScenario DcecScenario;

// Closed-form result. Rates in bit/s, delays in seconds. `r_d2d` is NaN
// when the policy has no D2D traffic.
typedef struct DcecPoint {
  double offloading_gain;
  double p_local;
  double p_d2d;
  double p_cluster;
  double p_miss;
  double r_backhaul;
  double r_nearest;
  double r_cluster;
  double r_d2d;
  double d_total;
  double d_backhaul;
  double d_nearest;
  double d_cluster;
  double d_d2d;
} DcecPoint;

// Monte Carlo means with 95% confidence half-widths. D2D fields are NaN
// when no drop produced a D2D sample.
typedef struct DcecSimulation {
  uint64_t drops;
  double r_backhaul;
  double r_backhaul_ci;
  double r_nearest;
  double r_nearest_ci;
  double r_cluster;
  double r_cluster_ci;
  double r_d2d;
  double r_d2d_ci;
  double d_total;
  double d_total_ci;
} DcecSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread; do not free.
const char *dcec_last_error(void);

// Library version as a static NUL-terminated string.
const char *dcec_version(void);

// Scenario with built-in defaults. Free with [`dcec_scenario_free`].
struct DcecScenario *dcec_scenario_default(void);

// Parses a JSON scenario. Keys left out take their defaults.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a writable pointer.
enum DcecStatus dcec_scenario_from_json(const char *json, struct DcecScenario **out);

// # Safety
// `scenario` must come from this library and not be freed already. NULL is a no-op.
void dcec_scenario_free(struct DcecScenario *scenario);

// # Safety
// `scenario` must be a live handle and `out` writable.
enum DcecStatus dcec_analytic(const struct DcecScenario *scenario,
                              enum DcecPolicy policy,
                              struct DcecPoint *out);

// Monte Carlo run of `drops` drops. Output depends only on the scenario,
// policy, drop count and seed.
//
// # Safety
// `scenario` must be a live handle and `out` writable.
enum DcecStatus dcec_simulate(const struct DcecScenario *scenario,
                              enum DcecPolicy policy,
                              uint64_t drops,
                              uint64_t seed,
                              struct DcecSimulation *out);

// Delay-minimizing cluster size in `k_min..=k_max`; ties go to the smaller K.
//
// # Safety
// `scenario` must be a live handle; `k_out` and `delay_out` writable.
enum DcecStatus dcec_optimal_cluster_size(const struct DcecScenario *scenario,
                                          size_t k_min,
                                          size_t k_max,
                                          size_t *k_out,
                                          double *delay_out);

// Writes the `n` Zipf request probabilities into `out`.
//
// # Safety
// `out` must point to `n` writable doubles.
enum DcecStatus dcec_zipf(size_t n, double skewness, double *out);

// Mean antenna gain (linear) over a uniform angle. A non-positive
// `mainlobe_deg` selects the width at which the main lobe meets the side lobe.
//
// # Safety
// `out` must be writable.
enum DcecStatus dcec_average_gain(double main_db,
                                  double side_db,
                                  double halfpower_deg,
                                  double mainlobe_deg,
                                  double rolloff,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCEC_H */
