//! Linear-optical circuit elements, their composition into a mode unitary,
//! and the permanent-based lift of mode unitaries to Fock-space evolution.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * A directional coupler with reflectivity `η` acts on its mode pair as
//!   `[[√(1−η), i√η], [i√η, √(1−η)]]` — transmitted amplitude real, cross
//!   amplitude `i√η`.
//! * A phase shifter multiplies its single mode by `e^{iφ}`; the
//!   Mach-Zehnder interferometer places it on the lower arm (mode 1).
//!
//! With these conventions the composed Mach-Zehnder matrix agrees with the
//! usual `[[sin(φ/2), cos(φ/2)], [cos(φ/2), −sin(φ/2)]]` form up to a global
//! phase, so all probability-level quantities are convention-independent.
//! Tests assert entry magnitudes and output probabilities, never raw phases
//! of the total matrix.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{enumerate_basis, FockError, FockState, FockVector};

/// Constructed mode matrices must satisfy `‖U·U† − I‖_max` below this.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("reflectivity must lie in [0, 1], got {0}")]
    ReflectivityRange(f64),
    #[error("phase must be finite, got {0}")]
    NonFinitePhase(f64),
    #[error("mode index {index} out of range for {mode_count} modes")]
    ModeOutOfRange { index: usize, mode_count: usize },
    #[error("coupler modes must be distinct, got ({0}, {0})")]
    CouplerModesEqual(usize),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("mode count mismatch: state has {state}, unitary acts on {unitary}")]
    DimensionMismatch { state: usize, unitary: usize },
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// An `m×m` complex matrix acting on mode creation operators,
/// unitarity-checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    matrix: Array2<Complex64>,
}

impl ModeUnitary {
    pub fn new(matrix: Array2<Complex64>) -> Result<Self, CircuitError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(CircuitError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let deviation = unitarity_deviation(&matrix.view());
        if deviation > UNITARITY_TOL {
            return Err(CircuitError::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn identity(mode_count: usize) -> Self {
        Self {
            matrix: Array2::eye(mode_count),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, Complex64> {
        self.matrix.view()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }

    /// `|U_00|²`: for a composed 2-mode interferometer this is the effective
    /// coupler reflectivity (`sin²(φ/2)` for the Mach-Zehnder).
    pub fn effective_reflectivity(&self) -> f64 {
        self.matrix[[0, 0]].norm_sqr()
    }

    /// `other · self`, i.e. `self` acts first.
    pub fn then(&self, other: &Self) -> Result<Self, CircuitError> {
        if self.mode_count() != other.mode_count() {
            return Err(CircuitError::DimensionMismatch {
                state: self.mode_count(),
                unitary: other.mode_count(),
            });
        }
        Self::new(other.matrix.dot(&self.matrix))
    }
}

/// Max-norm deviation of `M·M†` from the identity.
pub fn unitarity_deviation(matrix: &ArrayView2<'_, Complex64>) -> f64 {
    let m = matrix.nrows();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::ZERO;
            for k in 0..m {
                acc += matrix[[i, k]] * matrix[[j, k]].conj();
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

/// Directional coupler embedded at `modes`, identity elsewhere.
pub fn coupler_unitary(
    reflectivity: f64,
    modes: (usize, usize),
    mode_count: usize,
) -> Result<ModeUnitary, CircuitError> {
    validate_coupler(reflectivity, modes, mode_count)?;
    let t = (1.0 - reflectivity).sqrt();
    let r = reflectivity.sqrt();
    let mut matrix = Array2::eye(mode_count);
    let (a, b) = modes;
    matrix[[a, a]] = Complex64::new(t, 0.0);
    matrix[[b, b]] = Complex64::new(t, 0.0);
    matrix[[a, b]] = Complex64::new(0.0, r);
    matrix[[b, a]] = Complex64::new(0.0, r);
    ModeUnitary::new(matrix)
}

/// Phase shifter: `e^{iφ}` on `mode`, unity elsewhere.
pub fn phase_unitary(
    phase: f64,
    mode: usize,
    mode_count: usize,
) -> Result<ModeUnitary, CircuitError> {
    validate_phase(phase, mode, mode_count)?;
    let mut matrix = Array2::eye(mode_count);
    matrix[[mode, mode]] = Complex64::from_polar(1.0, phase);
    ModeUnitary::new(matrix)
}

fn validate_coupler(
    reflectivity: f64,
    modes: (usize, usize),
    mode_count: usize,
) -> Result<(), CircuitError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(CircuitError::ReflectivityRange(reflectivity));
    }
    for index in [modes.0, modes.1] {
        if index >= mode_count {
            return Err(CircuitError::ModeOutOfRange { index, mode_count });
        }
    }
    if modes.0 == modes.1 {
        return Err(CircuitError::CouplerModesEqual(modes.0));
    }
    Ok(())
}

fn validate_phase(phase: f64, mode: usize, mode_count: usize) -> Result<(), CircuitError> {
    if !phase.is_finite() {
        return Err(CircuitError::NonFinitePhase(phase));
    }
    if mode >= mode_count {
        return Err(CircuitError::ModeOutOfRange {
            index: mode,
            mode_count,
        });
    }
    Ok(())
}

/// One element of a linear-optical circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum CircuitElement {
    Coupler {
        reflectivity: f64,
        modes: (usize, usize),
    },
    PhaseShift {
        phase: f64,
        mode: usize,
    },
}

impl CircuitElement {
    fn unitary(&self, mode_count: usize) -> Result<ModeUnitary, CircuitError> {
        match *self {
            Self::Coupler {
                reflectivity,
                modes,
            } => coupler_unitary(reflectivity, modes, mode_count),
            Self::PhaseShift { phase, mode } => phase_unitary(phase, mode, mode_count),
        }
    }
}

/// An ordered sequence of elements over a fixed number of modes.
/// The first element acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    mode_count: usize,
    elements: Vec<CircuitElement>,
}

impl Circuit {
    pub fn new(mode_count: usize) -> Result<Self, CircuitError> {
        if mode_count == 0 {
            return Err(CircuitError::Fock(FockError::NoModes));
        }
        Ok(Self {
            mode_count,
            elements: Vec::new(),
        })
    }

    /// Coupler–phase–coupler Mach-Zehnder on 2 modes, both couplers 50:50,
    /// phase on the lower arm.
    pub fn mz_interferometer(phase: f64) -> Self {
        let mut circuit = Self::new(2).expect("two modes");
        circuit
            .add_coupler(0.5, (0, 1))
            .and_then(|_| circuit.add_phase_shift(phase, 1))
            .and_then(|_| circuit.add_coupler(0.5, (0, 1)))
            .expect("fixed MZ layout is valid");
        circuit
    }

    pub fn add_coupler(
        &mut self,
        reflectivity: f64,
        modes: (usize, usize),
    ) -> Result<(), CircuitError> {
        validate_coupler(reflectivity, modes, self.mode_count)?;
        self.elements.push(CircuitElement::Coupler {
            reflectivity,
            modes,
        });
        Ok(())
    }

    pub fn add_phase_shift(&mut self, phase: f64, mode: usize) -> Result<(), CircuitError> {
        validate_phase(phase, mode, self.mode_count)?;
        self.elements.push(CircuitElement::PhaseShift { phase, mode });
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    /// Ordered product of element unitaries; an empty circuit is the identity.
    pub fn compose(&self) -> Result<ModeUnitary, CircuitError> {
        let mut acc = ModeUnitary::identity(self.mode_count);
        for element in &self.elements {
            acc = acc.then(&element.unitary(self.mode_count)?)?;
        }
        Ok(acc)
    }
}

/// Matrix permanent by Ryser's formula with Gray-code subset iteration,
/// O(2ⁿ·n). The permanent of the empty (0×0) matrix is 1.
pub fn permanent(matrix: ArrayView2<'_, Complex64>) -> Result<Complex64, CircuitError> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(CircuitError::NotSquare {
            rows: n,
            cols: matrix.ncols(),
        });
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    assert!(n < 64, "permanent limited to n < 64");
    let mut row_sums = vec![Complex64::ZERO; n];
    let mut total = Complex64::ZERO;
    let mut prev_gray: u64 = 0;
    for k in 1..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let changed = gray ^ prev_gray;
        let col = changed.trailing_zeros() as usize;
        if gray & changed != 0 {
            for (i, sum) in row_sums.iter_mut().enumerate() {
                *sum += matrix[[i, col]];
            }
        } else {
            for (i, sum) in row_sums.iter_mut().enumerate() {
                *sum -= matrix[[i, col]];
            }
        }
        let product: Complex64 = row_sums.iter().product();
        if (gray.count_ones() as usize + n).is_multiple_of(2) {
            total += product;
        } else {
            total -= product;
        }
        prev_gray = gray;
    }
    Ok(total)
}

const FACTORIALS: [f64; 21] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
];

fn factorial(n: u32) -> f64 {
    FACTORIALS[n as usize]
}

/// Evolve a Fock vector through a mode unitary.
///
/// The amplitude to go from input occupations `S` to output occupations `T`
/// is `perm(U_{T,S}) / √(∏ S_i! ∏ T_j!)`, where `U_{T,S}` repeats column `i`
/// of the matrix `S_i` times and row `j` `T_j` times. Photon number is
/// conserved sector by sector, so mixed-number inputs (e.g. a pair source
/// state) are handled term by term.
pub fn evolve(input: &FockVector, unitary: &ModeUnitary) -> Result<FockVector, CircuitError> {
    let m = unitary.mode_count();
    if input.mode_count() != m {
        return Err(CircuitError::DimensionMismatch {
            state: input.mode_count(),
            unitary: m,
        });
    }
    let matrix = unitary.matrix();
    let mut output = FockVector::zero(m)?;
    let mut sector_cache: Vec<(u32, Vec<FockState>)> = Vec::new();
    for (in_state, in_amp) in input.terms() {
        let n = in_state.total_photons();
        let cols = repeated_indices(in_state);
        let in_factor: f64 = in_state
            .occupations()
            .iter()
            .map(|&s| factorial(s))
            .product();
        let sector = match sector_cache.iter().find(|(k, _)| *k == n) {
            Some((_, basis)) => basis.clone(),
            None => {
                let basis = enumerate_basis(m, n)?;
                sector_cache.push((n, basis.clone()));
                basis
            }
        };
        for out_state in &sector {
            let rows = repeated_indices(out_state);
            let mut sub = Array2::<Complex64>::zeros((n as usize, n as usize));
            for (r, &row) in rows.iter().enumerate() {
                for (c, &col) in cols.iter().enumerate() {
                    sub[[r, c]] = matrix[[row, col]];
                }
            }
            let perm = permanent(sub.view())?;
            if perm == Complex64::ZERO {
                continue;
            }
            let out_factor: f64 = out_state
                .occupations()
                .iter()
                .map(|&t| factorial(t))
                .product();
            let amp = in_amp * perm / (in_factor * out_factor).sqrt();
            output.add_term(out_state.clone(), amp)?;
        }
    }
    Ok(output.pruned())
}

/// Mode index `i` repeated `occupations[i]` times.
fn repeated_indices(state: &FockState) -> Vec<usize> {
    let mut out = Vec::with_capacity(state.total_photons() as usize);
    for (mode, &n) in state.occupations().iter().enumerate() {
        for _ in 0..n {
            out.push(mode);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fock(occ: &[u32]) -> FockState {
        FockState::new(occ.to_vec()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn balanced_coupler_splits_single_photon() {
        let u = coupler_unitary(0.5, (0, 1), 2).unwrap();
        let input = FockVector::from_occupations(&[1, 0]).unwrap();
        let out = evolve(&input, &u).unwrap();
        let s = 0.5f64.sqrt();
        assert!((out.amplitude(&fock(&[1, 0])) - c(s, 0.0)).norm() < 1e-12);
        assert!((out.amplitude(&fock(&[0, 1])) - c(0.0, s)).norm() < 1e-12);
    }

    #[test]
    fn zero_reflectivity_coupler_is_identity() {
        let u = coupler_unitary(0.0, (0, 1), 2).unwrap();
        assert!((u.entry(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(u.entry(0, 1).norm() < 1e-15);
    }

    #[test]
    fn full_reflectivity_coupler_is_pure_cross() {
        let u = coupler_unitary(1.0, (0, 1), 2).unwrap();
        assert!((u.entry(0, 1).norm() - 1.0).abs() < 1e-15);
        assert!((u.entry(1, 0).norm() - 1.0).abs() < 1e-15);
        assert!(u.entry(0, 0).norm() < 1e-15);
    }

    #[test]
    fn coupler_rejects_bad_reflectivity() {
        assert!(matches!(
            coupler_unitary(1.2, (0, 1), 2),
            Err(CircuitError::ReflectivityRange(_))
        ));
        assert!(matches!(
            coupler_unitary(-0.1, (0, 1), 2),
            Err(CircuitError::ReflectivityRange(_))
        ));
    }

    #[test]
    fn phase_shift_examples() {
        let u = phase_unitary(0.0, 1, 2).unwrap();
        assert_eq!(u.matrix(), ModeUnitary::identity(2).matrix());

        let phi = 0.7;
        let u = phase_unitary(phi, 1, 2).unwrap();
        let one = evolve(&FockVector::from_occupations(&[0, 1]).unwrap(), &u).unwrap();
        assert!((one.amplitude(&fock(&[0, 1])) - Complex64::from_polar(1.0, phi)).norm() < 1e-12);

        // Two photons in the shifted mode pick up e^{2iφ}.
        let two = evolve(&FockVector::from_occupations(&[0, 2]).unwrap(), &u).unwrap();
        assert!(
            (two.amplitude(&fock(&[0, 2])) - Complex64::from_polar(1.0, 2.0 * phi)).norm() < 1e-12
        );
    }

    #[test]
    fn phase_rejects_out_of_range_mode() {
        assert!(matches!(
            phase_unitary(0.3, 2, 2),
            Err(CircuitError::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_circuit_composes_to_identity() {
        let circuit = Circuit::new(3).unwrap();
        let u = circuit.compose().unwrap();
        assert_eq!(u.matrix(), ModeUnitary::identity(3).matrix());
    }

    #[test]
    fn mz_entry_magnitudes() {
        for &phi in &[0.0, 0.3, PI / 2.0, 1.9, PI, -2.4] {
            let u = Circuit::mz_interferometer(phi).compose().unwrap();
            let s2 = (phi / 2.0).sin().powi(2);
            let c2 = (phi / 2.0).cos().powi(2);
            assert!((u.entry(0, 0).norm_sqr() - s2).abs() < 1e-12, "phi={phi}");
            assert!((u.entry(0, 1).norm_sqr() - c2).abs() < 1e-12, "phi={phi}");
        }
    }

    #[test]
    fn mz_effective_reflectivity_examples() {
        let at = |phi: f64| {
            Circuit::mz_interferometer(phi)
                .compose()
                .unwrap()
                .effective_reflectivity()
        };
        assert!((at(PI) - 1.0).abs() < 1e-12);
        assert!(at(0.0) < 1e-12);
        assert!((at(PI / 2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mz_reflectivity_matches_law_on_grid() {
        for k in 0..=100 {
            let phi = -PI + 2.0 * PI * k as f64 / 100.0;
            let eta = Circuit::mz_interferometer(phi)
                .compose()
                .unwrap()
                .effective_reflectivity();
            assert!(
                (eta - (phi / 2.0).sin().powi(2)).abs() < 1e-12,
                "phi={phi}"
            );
        }
    }

    #[test]
    fn compose_is_unitary_for_random_parameters() {
        let params = [
            (0.13, 0.7),
            (0.5, -1.2),
            (0.91, 2.8),
            (0.27, 0.0),
            (0.66, -3.0),
        ];
        for &(eta, phi) in &params {
            let mut circuit = Circuit::new(3).unwrap();
            circuit.add_coupler(eta, (0, 1)).unwrap();
            circuit.add_phase_shift(phi, 2).unwrap();
            circuit.add_coupler(1.0 - eta, (1, 2)).unwrap();
            circuit.add_phase_shift(-phi / 2.0, 0).unwrap();
            let u = circuit.compose().unwrap();
            assert!(unitarity_deviation(&u.matrix()) < UNITARITY_TOL);
        }
    }

    #[test]
    fn permanent_small_cases() {
        let eye = Array2::<Complex64>::eye(2);
        assert!((permanent(eye.view()).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let m = ndarray::array![[c(1.0, 1.0), c(2.0, 0.0)], [c(0.5, -1.0), c(3.0, 0.5)]];
        let expected = m[[0, 0]] * m[[1, 1]] + m[[0, 1]] * m[[1, 0]];
        assert!((permanent(m.view()).unwrap() - expected).norm() < 1e-12);

        let ones = Array2::<Complex64>::from_elem((3, 3), c(1.0, 0.0));
        assert!((permanent(ones.view()).unwrap() - c(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn permanent_rejects_non_square() {
        let m = Array2::<Complex64>::zeros((2, 3));
        assert!(matches!(
            permanent(m.view()),
            Err(CircuitError::NotSquare { .. })
        ));
    }

    #[test]
    fn permanent_of_empty_matrix_is_one() {
        let m = Array2::<Complex64>::zeros((0, 0));
        assert_eq!(permanent(m.view()).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn hom_suppresses_coincidence() {
        let u = coupler_unitary(0.5, (0, 1), 2).unwrap();
        let out = evolve(&FockVector::from_occupations(&[1, 1]).unwrap(), &u).unwrap();
        assert!(out.amplitude(&fock(&[1, 1])).norm_sqr() < 1e-20);
        assert!((out.amplitude(&fock(&[2, 0])).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((out.amplitude(&fock(&[0, 2])).norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_pair_input_splits_three_quarters_to_extremes() {
        let u = coupler_unitary(0.5, (0, 1), 2).unwrap();
        let out = evolve(&FockVector::from_occupations(&[2, 2]).unwrap(), &u).unwrap();
        let w40 = out.amplitude(&fock(&[4, 0])).norm_sqr();
        let w04 = out.amplitude(&fock(&[0, 4])).norm_sqr();
        let w22 = out.amplitude(&fock(&[2, 2])).norm_sqr();
        assert!((w40 - 0.375).abs() < 1e-10);
        assert!((w04 - 0.375).abs() < 1e-10);
        assert!((w22 - 0.25).abs() < 1e-10);
        // The odd splits vanish, so only the extreme terms can feed (3,1).
        assert!(out.amplitude(&fock(&[3, 1])).norm_sqr() < 1e-20);
        assert!(out.amplitude(&fock(&[1, 3])).norm_sqr() < 1e-20);
    }

    #[test]
    fn identity_evolution_is_identity() {
        let input = FockVector::from_occupations(&[1, 0]).unwrap();
        let out = evolve(&input, &ModeUnitary::identity(2)).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn evolve_conserves_photon_number_and_norm() {
        let mut circuit = Circuit::new(2).unwrap();
        circuit.add_coupler(0.37, (0, 1)).unwrap();
        circuit.add_phase_shift(1.1, 1).unwrap();
        circuit.add_coupler(0.8, (0, 1)).unwrap();
        let u = circuit.compose().unwrap();
        for occ in [[3u32, 0], [2, 1], [2, 2], [1, 3]] {
            let n: u32 = occ.iter().sum();
            let input = FockVector::from_occupations(&occ).unwrap();
            let out = evolve(&input, &u).unwrap();
            for (state, _) in out.terms() {
                assert_eq!(state.total_photons(), n);
            }
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn evolve_rejects_dimension_mismatch() {
        let input = FockVector::from_occupations(&[1, 0, 0]).unwrap();
        let u = ModeUnitary::identity(2);
        assert!(matches!(
            evolve(&input, &u),
            Err(CircuitError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mode_unitary_rejects_non_unitary_input() {
        let m = Array2::<Complex64>::from_elem((2, 2), c(0.9, 0.0));
        assert!(matches!(
            ModeUnitary::new(m),
            Err(CircuitError::NotUnitary { .. })
        ));
    }
}
