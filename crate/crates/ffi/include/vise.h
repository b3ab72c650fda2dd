#ifndef VISE_H
#define VISE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ViseStatus {
  VISE_STATUS_OK = 0,
  VISE_STATUS_NULL_POINTER = 1,
  VISE_STATUS_INVALID_ARGUMENT = 2,
  VISE_STATUS_DEGENERATE_ENVIRONMENT = 3,
  VISE_STATUS_NO_PIT = 4,
  VISE_STATUS_INTERNAL = 5,
  VISE_STATUS_PANIC = 6,
} ViseStatus;

/*
 Trust tier of the normal approximation.
 */
typedef enum ViseValidity {
  VISE_VALIDITY_WEAK = 0,
  VISE_VALIDITY_ACCEPTABLE = 1,
  VISE_VALIDITY_STRONG = 2,
} ViseValidity;

/*
 Opaque simulation handle.
 */
typedef struct ViseSimulation ViseSimulation;

typedef struct ViseThresholdEstimate {
  double alpha_hat;
  double alpha_ladder;
  double alpha_bruteforce;
  double class_halfwidth;
  int64_t ladder_class;
  int64_t bruteforce_class;
  double best_value;
} ViseThresholdEstimate;

typedef struct VisePitReport {
  double right_zero;
  double min_rho;
  double min_value;
  double left_epsilon_bound;
  double epsilon;
} VisePitReport;

typedef struct ViseSimulationSummary {
  double mean_step_increment;
  double std_error;
  double acceptance_rate;
  double mean_final_capital;
  double ruined_count_mean;
  /*
   NaN when the Gini coefficient is undefined.
   */
  double gini_final;
} ViseSimulationSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Static description of a status code.
 */
const char *vise_status_string(enum ViseStatus status);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len - 1` bytes) and returns its full length in bytes.

 # Safety
 `buf` must be null or valid for `len` bytes of writes.
 */
size_t vise_last_error_message(char *buf, size_t len);

double vise_std_normal_pdf(double x);

double vise_std_normal_cdf(double x);

/*
 Exact expected one-step increment of an agent.

 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_expected_increment_exact(double mu,
                                              double sigma,
                                              uint64_t n,
                                              double alpha,
                                              double *out);

/*
 Normal approximation of the expected one-step increment.

 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_expected_increment_approx(double mu,
                                               double sigma,
                                               uint64_t n,
                                               double alpha,
                                               double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_approx_validity(double mu,
                                     double sigma,
                                     uint64_t n,
                                     double alpha,
                                     enum ViseValidity *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_neutral_mean_increment(double sigma, uint64_t n, double *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_rescaled_curve_value(uint64_t base_n,
                                          uint64_t target_n,
                                          double rho,
                                          double sigma,
                                          double alpha,
                                          double *out);

double vise_optimal_threshold_estimate(double rho);

double vise_optimal_threshold_ladder(double rho, uint64_t n);

double vise_threshold_sensitivity(double rho);

double vise_foc_residual(double alpha, double rho);

/*
 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_optimal_threshold_bruteforce(double mu,
                                                  double sigma,
                                                  uint64_t n,
                                                  struct ViseThresholdEstimate *out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_max_expected_increment(double mu, double sigma, uint64_t n, double *out);

/*
 Returns `ViseStatus::NoPit` when the exact curve never goes negative.

 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_pit_report(uint64_t n,
                                double sigma,
                                double alpha,
                                double epsilon,
                                struct VisePitReport *out);

/*
 Creates a simulation handle; free it with [`vise_simulation_free`].

 # Safety
 `out` must be valid for writes.
 */
enum ViseStatus vise_simulation_new(double mu,
                                    double sigma,
                                    uint64_t n,
                                    double alpha,
                                    uint64_t steps,
                                    uint64_t trials,
                                    uint64_t seed,
                                    struct ViseSimulation **out);

/*
 # Safety
 `sim` must be a live handle from [`vise_simulation_new`].
 */
enum ViseStatus vise_simulation_set_capital(struct ViseSimulation *sim,
                                            double initial_capital,
                                            double ruin_level);

/*
 Worker threads for subsequent runs; 0 selects the global pool.

 # Safety
 `sim` must be a live handle from [`vise_simulation_new`].
 */
enum ViseStatus vise_simulation_set_threads(struct ViseSimulation *sim, size_t threads);

/*
 # Safety
 `sim` must be a live handle and `out` valid for writes.
 */
enum ViseStatus vise_simulation_run(const struct ViseSimulation *sim,
                                    struct ViseSimulationSummary *out);

/*
 # Safety
 `sim` must be null or a handle from [`vise_simulation_new`] not yet freed.
 */
void vise_simulation_free(struct ViseSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VISE_H */
