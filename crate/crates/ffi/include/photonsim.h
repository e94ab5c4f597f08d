/* photonsim C API: multi-photon interference simulation for waveguide interferometers. */

#ifndef PHOTONSIM_H
#define PHOTONSIM_H

/* Generated by cbindgen from photonsim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible photonsim call.
typedef enum PsStatus {
  // Success.
  PS_STATUS_OK = 0,
  // A required pointer argument was null.
  PS_STATUS_NULL_POINTER = 1,
  // An argument was out of its documented domain.
  PS_STATUS_INVALID_ARGUMENT = 2,
  // Mode counts or dimensions do not match.
  PS_STATUS_DIMENSION_MISMATCH = 3,
  // An internal invariant failed; see `ps_last_error_message`.
  PS_STATUS_INTERNAL = 4,
} PsStatus;

// Spectral filter shape selector for [`ps_overlap`].
typedef enum PsFilterShape {
  PS_FILTER_SHAPE_GAUSSIAN = 0,
  PS_FILTER_SHAPE_SINC2 = 1,
} PsFilterShape;

// Opaque linear-optical circuit handle.
typedef struct PsCircuit PsCircuit;

// Opaque multi-mode photon state handle.
typedef struct PsState PsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message for the calling thread into `buffer`
// (NUL-terminated, truncated to `length` bytes). Returns the full message
// length in bytes, excluding the terminator.
//
// # Safety
// `buffer` must point to at least `length` writable bytes, or be null (in
// which case only the required length is returned).
size_t ps_last_error_message(char *buffer, size_t length);

// Create an empty circuit over `mode_count` modes. Returns null on error.
struct PsCircuit *ps_circuit_new(size_t mode_count);

// Create the 2-mode Mach-Zehnder interferometer (50:50 couplers, phase on
// the lower arm). Returns null for a non-finite phase.
struct PsCircuit *ps_circuit_mz(double phase);

// Append a directional coupler acting on modes (`mode_a`, `mode_b`).
//
// # Safety
// `circuit` must be a live handle from `ps_circuit_new`/`ps_circuit_mz`.
enum PsStatus ps_circuit_add_coupler(struct PsCircuit *circuit,
                                     double reflectivity,
                                     size_t mode_a,
                                     size_t mode_b);

// Append a phase shifter on one mode.
//
// # Safety
// `circuit` must be a live handle.
enum PsStatus ps_circuit_add_phase(struct PsCircuit *circuit, double phase, size_t mode);

// Release a circuit handle. Null is ignored.
//
// # Safety
// `circuit` must have come from this library and not be freed twice.
void ps_circuit_free(struct PsCircuit *circuit);

// Create a definite occupation-number state `|occupations⟩`.
//
// # Safety
// `occupations` must point to `mode_count` readable u32 values.
struct PsState *ps_state_fock(const uint32_t *occupations, size_t mode_count);

// Create the truncated two-mode pair-source state with geometric weights.
struct PsState *ps_state_spdc(double pair_amplitude, uint32_t max_pairs);

// Evolve a state through a circuit, writing a new state handle to `out`.
//
// # Safety
// All pointers must be live; `out` must be writable. The caller owns the
// state written to `out` and must free it with `ps_state_free`.
enum PsStatus ps_state_evolve(const struct PsState *state,
                              const struct PsCircuit *circuit,
                              struct PsState **out);

// Write `⟨state|state⟩^(1/2)` to `out`.
//
// # Safety
// `state` must be live and `out` writable.
enum PsStatus ps_state_norm(const struct PsState *state, double *out);

// Write the complex amplitude of `|occupations⟩` in `state`.
//
// # Safety
// `occupations` must hold `mode_count` values; `out_re`/`out_im` writable.
enum PsStatus ps_state_amplitude(const struct PsState *state,
                                 const uint32_t *occupations,
                                 size_t mode_count,
                                 double *out_re,
                                 double *out_im);

// Release a state handle. Null is ignored.
//
// # Safety
// `state` must have come from this library and not be freed twice.
void ps_state_free(struct PsState *state);

// Probability of finding exactly `photons[i]` photons in mode `modes[i]`
// for every monitored mode.
//
// # Safety
// `modes` and `photons` must each hold `pattern_len` values.
enum PsStatus ps_outcome_probability(const struct PsState *state,
                                     const size_t *modes,
                                     const uint32_t *photons,
                                     size_t pattern_len,
                                     double *out);

// Permanent of an `n×n` complex matrix given as row-major (re, im) pairs.
//
// # Safety
// `entries` must hold `2·n·n` doubles.
enum PsStatus ps_permanent(const double *entries, size_t n, double *out_re, double *out_im);

// Effective reflectivity `|U_00|²` of the Mach-Zehnder at `phase`
// (`sin²(phase/2)` up to numerical noise).
//
// # Safety
// `out` must be writable.
enum PsStatus ps_mz_effective_reflectivity(double phase, double *out);

// Ideal two-photon dip visibility at coupler reflectivity `eta`.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_ideal_hom_visibility(double eta, double *out);

// Average 1-photon state fidelity implied by a fringe of the given
// contrast, over the operating range of the phase shifter.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_average_fidelity(double contrast, double *out);

// Whether `contrast` clears the `1/√2` standard-quantum-limit threshold;
// writes the boolean (0/1) and the margin `contrast − 1/√2`.
//
// # Safety
// `out_beats` and `out_margin` must be writable.
enum PsStatus ps_contrast_beats_sql(double contrast,
                                    uint32_t photon_number,
                                    int32_t *out_beats,
                                    double *out_margin);

// Evaluate the quartic phase–voltage calibration `α + βV² + γV³ + δV⁴`.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_phase_of_voltage(double alpha,
                                  double beta,
                                  double gamma,
                                  double delta,
                                  double volts,
                                  double *out);

// Pairwise indistinguishability `|γ(τ)|²` at optical path difference
// `delay_um`, for a filter of the given center wavelength and bandwidth.
//
// # Safety
// `out` must be writable.
enum PsStatus ps_overlap(double center_wavelength_nm,
                         double bandwidth_nm,
                         enum PsFilterShape shape,
                         double delay_um,
                         double *out);

// Probability that every terminal detector of a splitter cascade fires when
// `photons` photons take branch `i` with probability `branches[i]`.
//
// # Safety
// `branches` must hold `branch_count` values; `out` must be writable.
enum PsStatus ps_cascade_click_probability(uint32_t photons,
                                           const double *branches,
                                           size_t branch_count,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTONSIM_H */
