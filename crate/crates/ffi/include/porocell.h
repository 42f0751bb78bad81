#ifndef POROCELL_H
#define POROCELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_PARAMETER = 2,
  PC_STATUS_NOT_FOUND = 3,
  PC_STATUS_NUMERICAL = 4,
  PC_STATUS_NO_ARRIVAL = 5,
  PC_STATUS_INFEASIBLE = 6,
  PC_STATUS_CONFIG = 7,
  PC_STATUS_IO = 8,
  PC_STATUS_PANIC = 9,
} PcStatus;

typedef enum PcElectrode {
  PC_ELECTRODE_ANODE = 0,
  PC_ELECTRODE_CATHODE = 1,
} PcElectrode;

typedef enum PcMechanism {
  PC_MECHANISM_SEI = 0,
  PC_MECHANISM_PLATING = 1,
  PC_MECHANISM_LAM = 2,
} PcMechanism;

typedef enum PcLiquid {
  PC_LIQUID_WATER = 0,
  PC_LIQUID_ELECTROLYTE = 1,
} PcLiquid;

// Opaque bubbly-liquid host.
typedef struct PcBubblyLiquid PcBubblyLiquid;

// Opaque layered cell stack.
typedef struct PcStack PcStack;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread. Valid until the next call
// on the same thread; never null.
const char *pc_last_error(void);

// Library version as a static NUL-terminated string.
const char *pc_version(void);

// Reference LFP prismatic cell.
//
// # Safety
// `out_stack` must be a valid pointer; the handle is released with [`pc_stack_free`].
enum PcStatus pc_stack_reference(struct PcStack **out_stack);

// # Safety
// `stack` must come from this library or be null.
void pc_stack_free(struct PcStack *stack);

// Total time of flight, s.
//
// # Safety
// Pointers must be valid.
enum PcStatus pc_stack_tof(const struct PcStack *stack, double *out_tof);

// Scale one electrode layer's velocity in place.
//
// # Safety
// Pointers must be valid.
enum PcStatus pc_stack_scale_velocity(struct PcStack *stack,
                                      enum PcElectrode electrode,
                                      double factor);

// Time of flight after losing `fraction` of the cyclable lithium, s, with
// the default molar volumes and stack stiffness.
//
// # Safety
// Pointers must be valid.
enum PcStatus pc_lithium_loss_tof(const struct PcStack *stack,
                                  enum PcMechanism mechanism,
                                  double fraction,
                                  double *out_tof);

// Fast and slow longitudinal Biot velocities, m/s. A non-positive
// `tortuosity` selects the default for the porosity.
//
// # Safety
// Out pointers must be valid.
enum PcStatus pc_biot_velocities(double porosity,
                                 double solid_bulk,
                                 double solid_shear,
                                 double fluid_bulk,
                                 double solid_density,
                                 double fluid_density,
                                 double tortuosity,
                                 double *out_fast,
                                 double *out_slow);

// # Safety
// `out_liquid` must be valid; release with [`pc_bubbly_liquid_free`].
enum PcStatus pc_bubbly_liquid_new(enum PcLiquid preset, struct PcBubblyLiquid **out_liquid);

// # Safety
// `liquid` must come from this library or be null.
void pc_bubbly_liquid_free(struct PcBubblyLiquid *liquid);

// Phase velocity over host sound speed for bubbles of `radius` (m) at void
// fraction `beta` and frequency `frequency` (Hz).
//
// # Safety
// Pointers must be valid.
enum PcStatus pc_bubbly_velocity_ratio(const struct PcBubblyLiquid *liquid,
                                       double radius,
                                       double beta,
                                       double frequency,
                                       double *out_ratio);

// Dual-end simulated longitudinal speed through the reference electrode
// microstructure with its binder moduli scaled by `binder_scale`, m/s.
// `voxel_size` is in metres; runtime grows as its inverse fourth power.
//
// # Safety
// `out_speed` must be valid.
enum PcStatus pc_electrode_speed(enum PcElectrode electrode,
                                 double voxel_size,
                                 double binder_scale,
                                 double *out_speed);

// Pearson correlation of two series of length `n`.
//
// # Safety
// `x` and `y` must point to `n` doubles each.
enum PcStatus pc_pearson(const double *x, const double *y, uintptr_t n, double *out_r);

// First crossing of `fraction` × peak |sample| with linear interpolation, s.
//
// # Safety
// `samples` must point to `n` doubles.
enum PcStatus pc_pick_first_arrival(const double *samples,
                                    uintptr_t n,
                                    double dt,
                                    double fraction,
                                    double *out_time);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POROCELL_H */
