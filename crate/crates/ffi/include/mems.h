#ifndef MEMS_H
#define MEMS_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Which field of a solution to read.
 */
typedef enum MemsField {
  MEMS_FIELD_PRESSURE = 0,
  MEMS_FIELD_VELOCITY = 1,
  MEMS_FIELD_GAP = 2,
} MemsField;

/**
 * Status codes shared by every function in this library.
 */
typedef enum MemsStatus {
  MEMS_STATUS_OK = 0,
  /**
   * A solver failed to converge or left its region of validity.
   */
  MEMS_STATUS_SOLVER = 1,
  /**
   * Malformed configuration or argument.
   */
  MEMS_STATUS_CONFIG = 2,
  /**
   * A required pointer was null.
   */
  MEMS_STATUS_NULL_POINTER = 3,
  /**
   * Index or buffer length out of range.
   */
  MEMS_STATUS_OUT_OF_RANGE = 4,
  MEMS_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  MEMS_STATUS_PANIC = 6,
} MemsStatus;

/**
 * Opaque solver configuration.
 */
typedef struct MemsConfig MemsConfig;

/**
 * Opaque time history of the pressure, velocity and gap.
 */
typedef struct MemsSolution MemsSolution;

typedef struct MemsQuench {
  double time;
  size_t node_index;
  double w_value;
} MemsQuench;

typedef struct MemsPullin {
  double estimate;
  double lo;
  double hi;
  double upper_bound;
} MemsPullin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error raised on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mems_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or come from this library and not be freed twice.
 */
void mems_string_free(char *s);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MemsStatus mems_config_default(struct MemsConfig **out);

/**
 * Parse `key = value` configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MemsStatus mems_config_parse(const char *text, struct MemsConfig **out);

/**
 * Load a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MemsStatus mems_config_load(const char *path, struct MemsConfig **out);

/**
 * Canonical text form of a configuration. Free with [`mems_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum MemsStatus mems_config_emit(const struct MemsConfig *cfg, char **out);

/**
 * Replace one `key = value` entry.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum MemsStatus mems_config_set(struct MemsConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void mems_config_free(struct MemsConfig *cfg);

/**
 * Run the coupled fixed-point solver over the configured horizon.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum MemsStatus mems_simulate(const struct MemsConfig *cfg, struct MemsSolution **out);

/**
 * Run the method-of-lines reference integrator. A touchdown is not an
 * error: the history stops at the last completed output level and the
 * event is available from [`mems_solution_quench`].
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum MemsStatus mems_simulate_reference(const struct MemsConfig *cfg, struct MemsSolution **out);

/**
 * Number of stored time levels, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t mems_solution_n_times(const struct MemsSolution *sol);

/**
 * Number of interior nodes, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t mems_solution_n_nodes(const struct MemsSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle and `out` a valid pointer.
 */
enum MemsStatus mems_solution_time(const struct MemsSolution *sol, size_t index, double *out);

/**
 * Copy one field at time level `index` into `buf`, which must hold at
 * least `mems_solution_n_nodes` values.
 *
 * # Safety
 * `sol` must be a live handle and `buf` valid for `len` writes.
 */
enum MemsStatus mems_solution_field(const struct MemsSolution *sol,
                                    enum MemsField field,
                                    size_t index,
                                    double *buf,
                                    size_t len);

/**
 * Writes the touchdown event and returns 1 if one occurred, else 0.
 * Returns -1 for null arguments.
 *
 * # Safety
 * `sol` must be a live handle and `out` a valid pointer.
 */
int32_t mems_solution_quench(const struct MemsSolution *sol, struct MemsQuench *out);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void mems_solution_free(struct MemsSolution *sol);

/**
 * Steady deflection at load `beta_f` on `n_nodes` interior nodes. When no
 * solution exists `*solvable` is 0 and `w` is left untouched.
 *
 * # Safety
 * `w` must be valid for `n_nodes` writes and `solvable` a valid pointer.
 */
enum MemsStatus mems_steady(double beta_f,
                            double length,
                            size_t n_nodes,
                            double tol,
                            double *w,
                            int32_t *solvable);

/**
 * Bisect for the largest solvable load.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MemsStatus mems_pullin(double length,
                            size_t n_nodes,
                            double bracket_tol,
                            struct MemsPullin *out);

/**
 * Run a verification suite by name and report the number of failed
 * checks. A suite with failures still returns `Ok`.
 *
 * # Safety
 * `suite` must be a NUL-terminated string and `failures` a valid pointer.
 */
enum MemsStatus mems_verify(const char *suite, uint64_t seed, size_t *failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMS_H */
