#ifndef CHVI_H
#define CHVI_H

#include <stddef.h>
#include <stdint.h>

/*
 Result codes. 2, 3 and 4 match the exit codes of the command line tool.
 */
typedef enum ChviStatus {
  CHVI_STATUS_OK = 0,
  CHVI_STATUS_INVALID_ARGUMENT = 1,
  CHVI_STATUS_CONFIG_ERROR = 2,
  CHVI_STATUS_NUMERICAL_FAILURE = 3,
  CHVI_STATUS_IO_ERROR = 4,
  CHVI_STATUS_NULL_POINTER = 5,
  CHVI_STATUS_PANIC = 6,
} ChviStatus;

typedef enum ChviPotentialKind {
  CHVI_POTENTIAL_KIND_LOGARITHMIC = 0,
  CHVI_POTENTIAL_KIND_OBSTACLE = 1,
  /*
   `u^4` with unit coefficient.
   */
  CHVI_POTENTIAL_KIND_DOUBLE_WELL = 2,
  /*
   `beta == 0`.
   */
  CHVI_POTENTIAL_KIND_NONE = 3,
} ChviPotentialKind;

/*
 Opaque simulation handle.
 */
typedef struct ChviSimulation ChviSimulation;

/*
 One evaluation of the Yosida family at a point.
 */
typedef struct ChviYosida {
  double resolvent;
  double yosida;
  double moreau;
  double residual;
} ChviYosida;

/*
 Summary of the most recent step.
 */
typedef struct ChviStepInfo {
  uint64_t step;
  double t;
  uint64_t newton_iters;
  double max_abs_u;
  double energy_defect;
} ChviStepInfo;

/*
 Energy ledger of the current state.
 */
typedef struct ChviEnergy {
  double kinetic;
  double dirichlet;
  double potential;
  double concave;
  double total;
  /*
   Against the previous step; zero before the first step.
   */
  double inequality_residual;
  double dissipation_integral;
} ChviEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread, or NULL.

 The pointer stays valid until the next call into this library on the
 same thread.
 */
const char *chvi_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *chvi_version(void);

/*
 Evaluates resolvent, Yosida approximation and Moreau envelope at `r`.

 # Safety
 `out` must be NULL or point to writable memory for one `ChviYosida`.
 */
enum ChviStatus chvi_resolvent(enum ChviPotentialKind kind,
                               double r,
                               double eps,
                               struct ChviYosida *out);

/*
 Creates a simulation from configuration text (`key=value` lines).

 # Safety
 `config` must be a NUL-terminated string; `out` must point to writable
 storage for one pointer. On failure `*out` is set to NULL.
 */
enum ChviStatus chvi_simulation_new(const char *config, struct ChviSimulation **out);

/*
 Creates a simulation that continues from a checkpoint file.

 # Safety
 As [`chvi_simulation_new`]; `checkpoint_path` must be a NUL-terminated
 string.
 */
enum ChviStatus chvi_simulation_resume(const char *config,
                                       const char *checkpoint_path,
                                       struct ChviSimulation **out);

/*
 Releases a handle. NULL is ignored.

 # Safety
 `sim` must be NULL or a handle from this library that was not yet freed.
 */
void chvi_simulation_free(struct ChviSimulation *sim);

/*
 Advances one time step. `info` may be NULL.

 # Safety
 `sim` must be a live handle; `info` NULL or writable.
 */
enum ChviStatus chvi_simulation_step(struct ChviSimulation *sim, struct ChviStepInfo *info);

/*
 Advances until the final time. Returns the number of steps taken in
 `steps_taken` (may be NULL).

 # Safety
 `sim` must be a live handle; `steps_taken` NULL or writable.
 */
enum ChviStatus chvi_simulation_run(struct ChviSimulation *sim, uint64_t *steps_taken);

/*
 Nonzero once the final time has been reached.

 # Safety
 `sim` must be NULL or a live handle.
 */
int32_t chvi_simulation_finished(const struct ChviSimulation *sim);

/*
 Energy ledger of the current state.

 # Safety
 `sim` must be a live handle; `out` writable.
 */
enum ChviStatus chvi_simulation_energy(const struct ChviSimulation *sim, struct ChviEnergy *out);

/*
 Number of spectral coefficients per field (`n^dim`).

 # Safety
 `sim` must be NULL or a live handle.
 */
size_t chvi_simulation_modes(const struct ChviSimulation *sim);

/*
 Current time and step.

 # Safety
 `sim` must be a live handle; `t` and `step` NULL or writable.
 */
enum ChviStatus chvi_simulation_time(const struct ChviSimulation *sim, double *t, uint64_t *step);

/*
 Copies the coefficients of `u` and `u_t` into caller buffers of length
 `len`, which must equal [`chvi_simulation_modes`]. Either buffer may be
 NULL.

 # Safety
 Non-NULL buffers must hold `len` writable doubles.
 */
enum ChviStatus chvi_simulation_state(const struct ChviSimulation *sim,
                                      double *u,
                                      double *v,
                                      size_t len);

/*
 Writes the current state as a CHVI1 checkpoint.

 # Safety
 `sim` must be a live handle; `path` a NUL-terminated string.
 */
enum ChviStatus chvi_simulation_write_checkpoint(const struct ChviSimulation *sim,
                                                 const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHVI_H */
