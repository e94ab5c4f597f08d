//! C ABI over the photonsim core so other languages can bind: opaque handles
//! for circuits and states, status codes for every fallible call, and a
//! thread-local error message retrievable with [`ps_last_error_message`].
//!
//! Ownership rules: every `*_new`-style constructor returns a heap handle the
//! caller must release with the matching `*_free`; output handles written
//! through out-pointers follow the same rule. All functions are safe to call
//! from multiple threads as long as a given handle is not used concurrently.

use std::cell::RefCell;
use std::ffi::CString;
use std::slice;

use libc::{c_char, size_t};
use ndarray::Array2;
use num_complex::Complex64;

use photonsim::analysis::{
    average_fidelity, contrast_beats_sql, ideal_hom_visibility, PhaseVoltageModel,
};
use photonsim::circuit::{evolve, permanent, Circuit};
use photonsim::detection::{
    cascade_click_probability, outcome_probability, DetectionPattern, FilterShape, OverlapModel,
};
use photonsim::fock::{FockState, FockVector};
use photonsim::source::SpdcSource;

/// Status code returned by every fallible photonsim call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of its documented domain.
    InvalidArgument = 2,
    /// Mode counts or dimensions do not match.
    DimensionMismatch = 3,
    /// An internal invariant failed; see `ps_last_error_message`.
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: PsStatus, message: &str) -> PsStatus {
    set_last_error(message);
    status
}

/// Copy the last error message for the calling thread into `buffer`
/// (NUL-terminated, truncated to `length` bytes). Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buffer` must point to at least `length` writable bytes, or be null (in
/// which case only the required length is returned).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_last_error_message(buffer: *mut c_char, length: size_t) -> size_t {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && length > 0 {
            let copy_len = bytes.len().min(length - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast::<u8>(), copy_len);
                *buffer.add(copy_len) = 0;
            }
        }
        bytes.len()
    })
}

/// Opaque linear-optical circuit handle.
pub struct PsCircuit {
    inner: Circuit,
}

/// Opaque multi-mode photon state handle.
pub struct PsState {
    inner: FockVector,
}

/// Create an empty circuit over `mode_count` modes. Returns null on error.
#[unsafe(no_mangle)]
pub extern "C" fn ps_circuit_new(mode_count: size_t) -> *mut PsCircuit {
    match Circuit::new(mode_count) {
        Ok(inner) => Box::into_raw(Box::new(PsCircuit { inner })),
        Err(e) => {
            set_last_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Create the 2-mode Mach-Zehnder interferometer (50:50 couplers, phase on
/// the lower arm). Returns null for a non-finite phase.
#[unsafe(no_mangle)]
pub extern "C" fn ps_circuit_mz(phase: f64) -> *mut PsCircuit {
    if !phase.is_finite() {
        set_last_error("phase must be finite");
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(PsCircuit {
        inner: Circuit::mz_interferometer(phase),
    }))
}

/// Append a directional coupler acting on modes (`mode_a`, `mode_b`).
///
/// # Safety
/// `circuit` must be a live handle from `ps_circuit_new`/`ps_circuit_mz`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_circuit_add_coupler(
    circuit: *mut PsCircuit,
    reflectivity: f64,
    mode_a: size_t,
    mode_b: size_t,
) -> PsStatus {
    let Some(circuit) = (unsafe { circuit.as_mut() }) else {
        return fail(PsStatus::NullPointer, "circuit handle is null");
    };
    match circuit.inner.add_coupler(reflectivity, (mode_a, mode_b)) {
        Ok(()) => PsStatus::Ok,
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}

/// Append a phase shifter on one mode.
///
/// # Safety
/// `circuit` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_circuit_add_phase(
    circuit: *mut PsCircuit,
    phase: f64,
    mode: size_t,
) -> PsStatus {
    let Some(circuit) = (unsafe { circuit.as_mut() }) else {
        return fail(PsStatus::NullPointer, "circuit handle is null");
    };
    match circuit.inner.add_phase_shift(phase, mode) {
        Ok(()) => PsStatus::Ok,
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}

/// Release a circuit handle. Null is ignored.
///
/// # Safety
/// `circuit` must have come from this library and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_circuit_free(circuit: *mut PsCircuit) {
    if !circuit.is_null() {
        drop(unsafe { Box::from_raw(circuit) });
    }
}

/// Create a definite occupation-number state `|occupations⟩`.
///
/// # Safety
/// `occupations` must point to `mode_count` readable u32 values.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_state_fock(
    occupations: *const u32,
    mode_count: size_t,
) -> *mut PsState {
    if occupations.is_null() {
        set_last_error("occupations pointer is null");
        return std::ptr::null_mut();
    }
    let occupations = unsafe { slice::from_raw_parts(occupations, mode_count) };
    match FockVector::from_occupations(occupations) {
        Ok(inner) => Box::into_raw(Box::new(PsState { inner })),
        Err(e) => {
            set_last_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Create the truncated two-mode pair-source state with geometric weights.
#[unsafe(no_mangle)]
pub extern "C" fn ps_state_spdc(pair_amplitude: f64, max_pairs: u32) -> *mut PsState {
    match SpdcSource::new(pair_amplitude, max_pairs) {
        Ok(source) => Box::into_raw(Box::new(PsState {
            inner: source.state(),
        })),
        Err(e) => {
            set_last_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Evolve a state through a circuit, writing a new state handle to `out`.
///
/// # Safety
/// All pointers must be live; `out` must be writable. The caller owns the
/// state written to `out` and must free it with `ps_state_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_state_evolve(
    state: *const PsState,
    circuit: *const PsCircuit,
    out: *mut *mut PsState,
) -> PsStatus {
    let (Some(state), Some(circuit)) = (unsafe { state.as_ref() }, unsafe { circuit.as_ref() })
    else {
        return fail(PsStatus::NullPointer, "state or circuit handle is null");
    };
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    let unitary = match circuit.inner.compose() {
        Ok(u) => u,
        Err(e) => return fail(PsStatus::Internal, &e.to_string()),
    };
    match evolve(&state.inner, &unitary) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(PsState { inner })) };
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::DimensionMismatch, &e.to_string()),
    }
}

/// Write `⟨state|state⟩^(1/2)` to `out`.
///
/// # Safety
/// `state` must be live and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_state_norm(state: *const PsState, out: *mut f64) -> PsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return fail(PsStatus::NullPointer, "state handle is null");
    };
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    unsafe { *out = state.inner.norm() };
    PsStatus::Ok
}

/// Write the complex amplitude of `|occupations⟩` in `state`.
///
/// # Safety
/// `occupations` must hold `mode_count` values; `out_re`/`out_im` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_state_amplitude(
    state: *const PsState,
    occupations: *const u32,
    mode_count: size_t,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return fail(PsStatus::NullPointer, "state handle is null");
    };
    if occupations.is_null() || out_re.is_null() || out_im.is_null() {
        return fail(PsStatus::NullPointer, "pointer argument is null");
    }
    if mode_count != state.inner.mode_count() {
        return fail(
            PsStatus::DimensionMismatch,
            "occupation list length does not match the state's mode count",
        );
    }
    let occupations = unsafe { slice::from_raw_parts(occupations, mode_count) };
    let target = match FockState::new(occupations.to_vec()) {
        Ok(s) => s,
        Err(e) => return fail(PsStatus::InvalidArgument, &e.to_string()),
    };
    let amplitude = state.inner.amplitude(&target);
    unsafe {
        *out_re = amplitude.re;
        *out_im = amplitude.im;
    }
    PsStatus::Ok
}

/// Release a state handle. Null is ignored.
///
/// # Safety
/// `state` must have come from this library and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_state_free(state: *mut PsState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Probability of finding exactly `photons[i]` photons in mode `modes[i]`
/// for every monitored mode.
///
/// # Safety
/// `modes` and `photons` must each hold `pattern_len` values.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_outcome_probability(
    state: *const PsState,
    modes: *const size_t,
    photons: *const u32,
    pattern_len: size_t,
    out: *mut f64,
) -> PsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return fail(PsStatus::NullPointer, "state handle is null");
    };
    if modes.is_null() || photons.is_null() || out.is_null() {
        return fail(PsStatus::NullPointer, "pointer argument is null");
    }
    let modes = unsafe { slice::from_raw_parts(modes, pattern_len) };
    let photons = unsafe { slice::from_raw_parts(photons, pattern_len) };
    let pattern = match DetectionPattern::new(modes.iter().copied().zip(photons.iter().copied())) {
        Ok(p) => p,
        Err(e) => return fail(PsStatus::InvalidArgument, &e.to_string()),
    };
    match outcome_probability(&state.inner, &pattern) {
        Ok(p) => {
            unsafe { *out = p };
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}

/// Permanent of an `n×n` complex matrix given as row-major (re, im) pairs.
///
/// # Safety
/// `entries` must hold `2·n·n` doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_permanent(
    entries: *const f64,
    n: size_t,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PsStatus {
    if entries.is_null() || out_re.is_null() || out_im.is_null() {
        return fail(PsStatus::NullPointer, "pointer argument is null");
    }
    let raw = unsafe { slice::from_raw_parts(entries, 2 * n * n) };
    let matrix = Array2::from_shape_fn((n, n), |(row, col)| {
        let base = 2 * (row * n + col);
        Complex64::new(raw[base], raw[base + 1])
    });
    match permanent(matrix.view()) {
        Ok(value) => {
            unsafe {
                *out_re = value.re;
                *out_im = value.im;
            }
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}

/// Effective reflectivity `|U_00|²` of the Mach-Zehnder at `phase`
/// (`sin²(phase/2)` up to numerical noise).
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_mz_effective_reflectivity(phase: f64, out: *mut f64) -> PsStatus {
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    if !phase.is_finite() {
        return fail(PsStatus::InvalidArgument, "phase must be finite");
    }
    match Circuit::mz_interferometer(phase).compose() {
        Ok(u) => {
            unsafe { *out = u.effective_reflectivity() };
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::Internal, &e.to_string()),
    }
}

/// Ideal two-photon dip visibility at coupler reflectivity `eta`.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_ideal_hom_visibility(eta: f64, out: *mut f64) -> PsStatus {
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    if !(0.0..=1.0).contains(&eta) {
        return fail(PsStatus::InvalidArgument, "eta must lie in [0, 1]");
    }
    unsafe { *out = ideal_hom_visibility(eta) };
    PsStatus::Ok
}

/// Average 1-photon state fidelity implied by a fringe of the given
/// contrast, over the operating range of the phase shifter.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_average_fidelity(contrast: f64, out: *mut f64) -> PsStatus {
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    if !(0.0..=1.0).contains(&contrast) {
        return fail(PsStatus::InvalidArgument, "contrast must lie in [0, 1]");
    }
    unsafe { *out = average_fidelity(contrast) };
    PsStatus::Ok
}

/// Whether `contrast` clears the `1/√2` standard-quantum-limit threshold;
/// writes the boolean (0/1) and the margin `contrast − 1/√2`.
///
/// # Safety
/// `out_beats` and `out_margin` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_contrast_beats_sql(
    contrast: f64,
    photon_number: u32,
    out_beats: *mut i32,
    out_margin: *mut f64,
) -> PsStatus {
    if out_beats.is_null() || out_margin.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    let check = contrast_beats_sql(contrast, photon_number);
    unsafe {
        *out_beats = check.beats_sql as i32;
        *out_margin = check.margin;
    }
    PsStatus::Ok
}

/// Evaluate the quartic phase–voltage calibration `α + βV² + γV³ + δV⁴`.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_phase_of_voltage(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    volts: f64,
    out: *mut f64,
) -> PsStatus {
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    if !volts.is_finite() {
        return fail(PsStatus::InvalidArgument, "volts must be finite");
    }
    unsafe { *out = PhaseVoltageModel::new(alpha, beta, gamma, delta).eval(volts) };
    PsStatus::Ok
}

/// Spectral filter shape selector for [`ps_overlap`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsFilterShape {
    Gaussian = 0,
    Sinc2 = 1,
}

/// Pairwise indistinguishability `|γ(τ)|²` at optical path difference
/// `delay_um`, for a filter of the given center wavelength and bandwidth.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_overlap(
    center_wavelength_nm: f64,
    bandwidth_nm: f64,
    shape: PsFilterShape,
    delay_um: f64,
    out: *mut f64,
) -> PsStatus {
    if out.is_null() {
        return fail(PsStatus::NullPointer, "output pointer is null");
    }
    let shape = match shape {
        PsFilterShape::Gaussian => FilterShape::Gaussian,
        PsFilterShape::Sinc2 => FilterShape::Sinc2,
    };
    let model = match OverlapModel::new(center_wavelength_nm, bandwidth_nm, shape) {
        Ok(m) => m,
        Err(e) => return fail(PsStatus::InvalidArgument, &e.to_string()),
    };
    match model.overlap(delay_um) {
        Ok(x) => {
            unsafe { *out = x };
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}

/// Probability that every terminal detector of a splitter cascade fires when
/// `photons` photons take branch `i` with probability `branches[i]`.
///
/// # Safety
/// `branches` must hold `branch_count` values; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ps_cascade_click_probability(
    photons: u32,
    branches: *const f64,
    branch_count: size_t,
    out: *mut f64,
) -> PsStatus {
    if branches.is_null() || out.is_null() {
        return fail(PsStatus::NullPointer, "pointer argument is null");
    }
    let branches = unsafe { slice::from_raw_parts(branches, branch_count) };
    match cascade_click_probability(photons, branches) {
        Ok(p) => {
            unsafe { *out = p };
            PsStatus::Ok
        }
        Err(e) => fail(PsStatus::InvalidArgument, &e.to_string()),
    }
}
