#ifndef DLSCP_H
#define DLSCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Length of a packed state: position, velocity, scalar-last quaternion,
// body rate.
#define DLSCP_STATE_DIM 13

typedef enum DlscpStatus {
  DLSCP_STATUS_OK = 0,
  // The solve ran to its iteration cap; the solution handle is still
  // written and holds the last iterate.
  DLSCP_STATUS_NOT_CONVERGED = 1,
  DLSCP_STATUS_NULL_POINTER = 2,
  DLSCP_STATUS_INVALID_STRING = 3,
  DLSCP_STATUS_CONFIG = 4,
  DLSCP_STATUS_SOLVER = 5,
  DLSCP_STATUS_OUT_OF_RANGE = 6,
  DLSCP_STATUS_IO = 7,
  DLSCP_STATUS_PANIC = 8,
} DlscpStatus;

// A validated run configuration.
typedef struct DlscpConfig DlscpConfig;

// Result of a solve together with the config that produced it.
typedef struct DlscpSolution DlscpSolution;

// Scalar results of a solve.
typedef struct DlscpSummary {
  bool converged;
  size_t iterations;
  size_t homotopy_updates;
  size_t nodes;
  size_t thrusters;
  double final_time;
  // Normalized fuel cost `Σ Δt / Δt_max`.
  double fuel_cost;
  // Total impulse `F·ΣΔt`, N·s.
  double impulse;
} DlscpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the untruncated message length
// excluding the terminator, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t dlscp_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *dlscp_version(void);

// Creates the default Apollo rendezvous configuration.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum DlscpStatus dlscp_config_default(struct DlscpConfig **out);

// Parses and validates a TOML configuration.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum DlscpStatus dlscp_config_from_toml(const char *toml, struct DlscpConfig **out);

// Loads and validates a TOML configuration file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DlscpStatus dlscp_config_load(const char *path, struct DlscpConfig **out);

// Serializes a configuration to TOML. The returned string is released with
// [`dlscp_string_free`].
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum DlscpStatus dlscp_config_to_toml(const struct DlscpConfig *cfg, char **out);

// Sets the PTR iteration cap.
//
// # Safety
// `cfg` must be a live handle.
enum DlscpStatus dlscp_config_set_max_iters(struct DlscpConfig *cfg, size_t max_iters);

// Sets the homotopy trigger threshold.
//
// # Safety
// `cfg` must be a live handle.
enum DlscpStatus dlscp_config_set_beta_trig(struct DlscpConfig *cfg, double beta_trig);

// Writes the homotopy sharpness after each update, `updates` values, into
// `out`. Returns [`DlscpStatus::OutOfRange`] if `len` is too small.
//
// # Safety
// `cfg` must be a live handle; `out` must point to `len` writable doubles.
enum DlscpStatus dlscp_config_homotopy_schedule(const struct DlscpConfig *cfg,
                                                double *out,
                                                size_t len);

// # Safety
// `cfg` must be null or a handle not yet freed.
void dlscp_config_free(struct DlscpConfig *cfg);

// Runs the optimizer. On [`DlscpStatus::Ok`] or
// [`DlscpStatus::NotConverged`] a solution handle is written to `out`.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum DlscpStatus dlscp_solve(const struct DlscpConfig *cfg, struct DlscpSolution **out);

// # Safety
// `sol` must be null or a handle not yet freed.
void dlscp_solution_free(struct DlscpSolution *sol);

// # Safety
// `sol` must be a live handle; `out` must be writable.
enum DlscpStatus dlscp_solution_summary(const struct DlscpSolution *sol, struct DlscpSummary *out);

// Copies node state `k` (`0..=nodes`) into `out[0..13]`.
//
// # Safety
// `sol` must be a live handle; `out` must point to 13 writable doubles.
enum DlscpStatus dlscp_solution_state(const struct DlscpSolution *sol, size_t k, double *out);

// Copies the pulse durations fired at node `k` (`0..nodes`) into `out`.
//
// # Safety
// `sol` must be a live handle; `out` must point to `len` writable doubles.
enum DlscpStatus dlscp_solution_pulses(const struct DlscpSolution *sol,
                                       size_t k,
                                       double *out,
                                       size_t len);

// Re-propagates the solution and checks it against the exact logic.
// `passed` receives whether every check held.
//
// # Safety
// `sol` must be a live handle; `passed` must be writable.
enum DlscpStatus dlscp_solution_verify(const struct DlscpSolution *sol, bool *passed);

// Writes the run artifacts (trajectory, schedule, iterate log, summary,
// verification) into directory `dir`, creating it if needed.
//
// # Safety
// `sol` must be a live handle; `dir` must be a NUL-terminated string.
enum DlscpStatus dlscp_solution_write(const struct DlscpSolution *sol, const char *dir);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void dlscp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLSCP_H */
