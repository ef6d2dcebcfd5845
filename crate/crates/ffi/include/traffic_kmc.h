/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TRAFFIC_KMC_H
#define TRAFFIC_KMC_H



#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TkmcStatus {
  TKMC_STATUS_OK = 0,
  TKMC_STATUS_NULL_POINTER = 1,
  TKMC_STATUS_INVALID_ARGUMENT = 2,
  TKMC_STATUS_BUFFER_TOO_SMALL = 3,
  TKMC_STATUS_UNSUPPORTED = 4,
  /**
   * The total rate is zero; nothing more can happen.
   */
  TKMC_STATUS_FROZEN = 5,
  TKMC_STATUS_PANIC = 6,
} TkmcStatus;

typedef enum TkmcKernelKind {
  TKMC_KERNEL_KIND_CONSTANT = 0,
  TKMC_KERNEL_KIND_LINEAR = 1,
  TKMC_KERNEL_KIND_EXPONENTIAL = 2,
} TkmcKernelKind;

typedef enum TkmcSlowdownKind {
  TKMC_SLOWDOWN_KIND_ARRHENIUS = 0,
  TKMC_SLOWDOWN_KIND_LINEAR = 1,
  TKMC_SLOWDOWN_KIND_QUADRATIC = 2,
} TkmcSlowdownKind;

typedef enum TkmcEngine {
  TKMC_ENGINE_STANDARD = 0,
  TKMC_ENGINE_ACCELERATED = 1,
  TKMC_ENGINE_LIST = 2,
} TkmcEngine;

typedef enum TkmcDtConvention {
  TKMC_DT_CONVENTION_POST = 0,
  TKMC_DT_CONVENTION_PRE = 1,
} TkmcDtConvention;

typedef enum TkmcLimit {
  TKMC_LIMIT_LAMBDA_TO_ZERO = 0,
  TKMC_LIMIT_LAMBDA_TO_INFINITY = 1,
} TkmcLimit;

/**
 * Opaque simulation handle.
 */
typedef struct TkmcSim TkmcSim;

/**
 * Plain-data run configuration. Fill with [`tkmc_config_default`] first.
 */
typedef struct TkmcConfig {
  size_t n_cells;
  size_t n_cars;
  size_t jump;
  double omega0;
  enum TkmcKernelKind kernel;
  /**
   * Look-ahead L for constant/linear kernels, lambda for exponential.
   */
  double kernel_param;
  enum TkmcSlowdownKind slowdown;
  /**
   * Arrhenius coefficient; ignored by the other slowdowns.
   */
  double slowdown_c;
  double t_final;
  double burn_in;
  uint64_t seed;
  enum TkmcEngine engine;
  uint64_t refresh_every;
  size_t detector;
  enum TkmcDtConvention dt_convention;
} TkmcConfig;

/**
 * One step. `old_cell` and `new_cell` are -1 for a null event.
 */
typedef struct TkmcEvent {
  double time_before;
  double dt;
  size_t car;
  int64_t old_cell;
  int64_t new_cell;
  bool executed;
} TkmcEvent;

typedef struct TkmcSummary {
  double f_bar;
  double v_bar;
  uint64_t crossings;
  uint64_t cells_advanced;
  double measure_time;
  uint64_t executed;
  uint64_t null_events;
  bool frozen;
  double final_clock;
} TkmcSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tkmc_version(void);

/**
 * Message for the last failed call on this thread, or "" after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *tkmc_last_error(void);

/**
 * Defaults: 1000 cells, 300 cars, J = 1, omega0 = 4, exponential kernel
 * with lambda = 10, Arrhenius slowdown with c = 1, one hour with 360 s
 * burn-in, accelerated engine.
 *
 * # Safety
 * `out` must be null or point to writable memory for a `TkmcConfig`.
 */
enum TkmcStatus tkmc_config_default(struct TkmcConfig *out);

/**
 * Builds a simulation with randomly placed cars.
 *
 * # Safety
 * `config` must be null or point to a valid `TkmcConfig`; `out` must be
 * null or writable. On success `*out` owns a handle for `tkmc_sim_free`.
 */
enum TkmcStatus tkmc_sim_new(const struct TkmcConfig *config, struct TkmcSim **out);

/**
 * # Safety
 * `sim` must be null or a handle from `tkmc_sim_new` not yet freed.
 */
void tkmc_sim_free(struct TkmcSim *sim);

/**
 * One step. Returns `TKMC_STATUS_FROZEN` (and leaves `*event` untouched)
 * once no event can fire.
 *
 * # Safety
 * `sim` must be a live handle; `event` must be null or writable.
 */
enum TkmcStatus tkmc_sim_step(struct TkmcSim *sim, struct TkmcEvent *event);

/**
 * Runs to `t_final` (or until frozen) and reports the measured averages.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be null or writable.
 */
enum TkmcStatus tkmc_sim_run(struct TkmcSim *sim, struct TkmcSummary *out);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be null or writable.
 */
enum TkmcStatus tkmc_sim_clock(const struct TkmcSim *sim, double *out);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be null or writable.
 */
enum TkmcStatus tkmc_sim_total_rate(const struct TkmcSim *sim, double *out);

/**
 * Number of cells; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t tkmc_sim_n_cells(const struct TkmcSim *sim);

/**
 * Number of cars; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t tkmc_sim_n_cars(const struct TkmcSim *sim);

/**
 * Writes 1 for occupied and 0 for vacant cells into `buf[0..n_cells]`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be writable for `len` bytes.
 */
enum TkmcStatus tkmc_sim_occupancy(const struct TkmcSim *sim, uint8_t *buf, size_t len);

/**
 * Writes each car's cell, indexed by car, into `buf[0..n_cars]`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be writable for `len` elements.
 */
enum TkmcStatus tkmc_sim_car_cells(const struct TkmcSim *sim, size_t *buf, size_t len);

/**
 * Limiting flux in cars/s.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TkmcStatus tkmc_flux_limit(double rho,
                                size_t jump,
                                double omega0,
                                enum TkmcLimit lim,
                                enum TkmcSlowdownKind g,
                                double slowdown_c,
                                double *out);

/**
 * Density of maximal limiting flux. `TKMC_STATUS_UNSUPPORTED` for the
 * Arrhenius slowdown as lambda -> 0.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum TkmcStatus tkmc_critical_density(size_t jump,
                                      enum TkmcLimit lim,
                                      enum TkmcSlowdownKind g,
                                      double slowdown_c,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAFFIC_KMC_H */
