//! Occupation-number states and complex superpositions over optical modes.
//!
//! States are stored sparsely: a [`FockVector`] maps basis [`FockState`]s to
//! complex amplitudes. The canonical basis order is lexicographic *descending*
//! on the occupation list, so `|2,0⟩` sorts before `|1,1⟩` before `|0,2⟩`.
//! Serialized vectors list their terms in this order, which makes the text
//! form reproducible byte for byte.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for norm assertions in this module.
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes with squared magnitude below this are dropped by [`FockVector::pruned`].
pub const AMPLITUDE_PRUNE_TOL: f64 = 1e-14;

/// Schema tag written into serialized [`FockVector`] records.
pub const FOCK_SCHEMA: &str = "photonsim.fock.v1";

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("mode count must be at least 1")]
    NoModes,
    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },
    #[error("cannot normalize a vector with zero norm")]
    ZeroNorm,
    #[error("invalid fock record: {0}")]
    BadRecord(String),
}

/// A definite photon-number configuration `|n_1, n_2, ..., n_m⟩`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FockState {
    occupations: Vec<u32>,
}

impl FockState {
    /// Build a state from per-mode photon counts. At least one mode is required.
    pub fn new(occupations: Vec<u32>) -> Result<Self, FockError> {
        if occupations.is_empty() {
            return Err(FockError::NoModes);
        }
        Ok(Self { occupations })
    }

    /// The vacuum over `mode_count` modes.
    pub fn vacuum(mode_count: usize) -> Result<Self, FockError> {
        Self::new(vec![0; mode_count])
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn mode_count(&self) -> usize {
        self.occupations.len()
    }

    /// Total photon number across all modes.
    pub fn total_photons(&self) -> u32 {
        self.occupations.iter().sum()
    }

    pub fn occupation(&self, mode: usize) -> u32 {
        self.occupations[mode]
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.occupations.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

// Canonical basis order: lexicographic descending on occupations, so that
// |2,0⟩ < |1,1⟩ < |0,2⟩ and BTreeMap iteration yields the documented order.
impl Ord for FockState {
    fn cmp(&self, other: &Self) -> Ordering {
        other.occupations.cmp(&self.occupations)
    }
}

impl PartialOrd for FockState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All occupation lists over `mode_count` modes summing to `photon_count`,
/// in canonical (lexicographic descending) order.
pub fn enumerate_basis(mode_count: usize, photon_count: u32) -> Result<Vec<FockState>, FockError> {
    if mode_count == 0 {
        return Err(FockError::NoModes);
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; mode_count];
    fill_basis(&mut out, &mut current, 0, photon_count);
    Ok(out)
}

fn fill_basis(out: &mut Vec<FockState>, current: &mut Vec<u32>, mode: usize, remaining: u32) {
    if mode == current.len() - 1 {
        current[mode] = remaining;
        out.push(FockState {
            occupations: current.clone(),
        });
        return;
    }
    // Descending first entry gives the canonical order directly.
    for n in (0..=remaining).rev() {
        current[mode] = n;
        fill_basis(out, current, mode + 1, remaining - n);
    }
}

/// A complex superposition of [`FockState`]s sharing one mode count.
#[derive(Clone, PartialEq)]
pub struct FockVector {
    mode_count: usize,
    terms: BTreeMap<FockState, Complex64>,
}

impl FockVector {
    /// The zero vector over `mode_count` modes.
    pub fn zero(mode_count: usize) -> Result<Self, FockError> {
        if mode_count == 0 {
            return Err(FockError::NoModes);
        }
        Ok(Self {
            mode_count,
            terms: BTreeMap::new(),
        })
    }

    /// A unit basis vector `|state⟩`.
    pub fn basis_state(state: FockState) -> Self {
        let mode_count = state.mode_count();
        let mut terms = BTreeMap::new();
        terms.insert(state, Complex64::new(1.0, 0.0));
        Self { mode_count, terms }
    }

    /// Convenience: unit basis vector from raw occupations.
    pub fn from_occupations(occupations: &[u32]) -> Result<Self, FockError> {
        Ok(Self::basis_state(FockState::new(occupations.to_vec())?))
    }

    /// Accumulate terms into a vector, rejecting mode-count mismatches.
    pub fn from_terms(
        mode_count: usize,
        terms: impl IntoIterator<Item = (FockState, Complex64)>,
    ) -> Result<Self, FockError> {
        let mut v = Self::zero(mode_count)?;
        for (state, amplitude) in terms {
            v.add_term(state, amplitude)?;
        }
        Ok(v)
    }

    /// Add `amplitude` onto the coefficient of `|state⟩`.
    pub fn add_term(&mut self, state: FockState, amplitude: Complex64) -> Result<(), FockError> {
        if state.mode_count() != self.mode_count {
            return Err(FockError::ModeMismatch {
                left: self.mode_count,
                right: state.mode_count(),
            });
        }
        *self.terms.entry(state).or_insert(Complex64::ZERO) += amplitude;
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Number of stored (possibly zero) terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&FockState, Complex64)> {
        self.terms.iter().map(|(s, a)| (s, *a))
    }

    /// Amplitude of `|state⟩`, zero when absent.
    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.terms.get(state).copied().unwrap_or(Complex64::ZERO)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64, FockError> {
        if self.mode_count != other.mode_count {
            return Err(FockError::ModeMismatch {
                left: self.mode_count,
                right: other.mode_count,
            });
        }
        let mut acc = Complex64::ZERO;
        // Only states present on both sides contribute; iterate the sparser one.
        let short = if self.terms.len() <= other.terms.len() {
            &self.terms
        } else {
            &other.terms
        };
        for state in short.keys() {
            if let (Some(a), Some(b)) = (self.terms.get(state), other.terms.get(state)) {
                acc += a.conj() * b;
            }
        }
        Ok(acc)
    }

    /// `⟨self|self⟩` as a real number.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit-norm copy; direction preserved.
    pub fn normalized(&self) -> Result<Self, FockError> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            mode_count: self.mode_count,
            terms: self
                .terms
                .iter()
                .map(|(s, a)| (s.clone(), a * factor))
                .collect(),
        }
    }

    /// Copy with negligible amplitudes removed (see [`AMPLITUDE_PRUNE_TOL`]).
    pub fn pruned(&self) -> Self {
        Self {
            mode_count: self.mode_count,
            terms: self
                .terms
                .iter()
                .filter(|(_, a)| a.norm() > AMPLITUDE_PRUNE_TOL)
                .map(|(s, a)| (s.clone(), *a))
                .collect(),
        }
    }

    /// Serializable record with terms in canonical order.
    pub fn to_record(&self) -> FockVectorRecord {
        FockVectorRecord {
            schema: FOCK_SCHEMA.to_string(),
            mode_count: self.mode_count,
            terms: self
                .terms
                .iter()
                .map(|(s, a)| FockTermRecord {
                    occupations: s.occupations.clone(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_record(record: &FockVectorRecord) -> Result<Self, FockError> {
        if record.schema != FOCK_SCHEMA {
            return Err(FockError::BadRecord(format!(
                "unsupported schema `{}`",
                record.schema
            )));
        }
        let mut v = Self::zero(record.mode_count)?;
        for term in &record.terms {
            v.add_term(
                FockState::new(term.occupations.clone())?,
                Complex64::new(term.re, term.im),
            )?;
        }
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("fock record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FockError> {
        let record: FockVectorRecord =
            serde_json::from_str(text).map_err(|e| FockError::BadRecord(e.to_string()))?;
        Self::from_record(&record)
    }
}

impl fmt::Debug for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (state, amp) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", amp.re, amp.im, state)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Text form of a [`FockVector`]: mode count plus (occupations, re, im) triples
/// in canonical basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockVectorRecord {
    pub schema: String,
    pub mode_count: usize,
    pub terms: Vec<FockTermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockTermRecord {
    pub occupations: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// Binomial coefficient as f64; exact for the small arguments used here.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock(occ: &[u32]) -> FockState {
        FockState::new(occ.to_vec()).unwrap()
    }

    #[test]
    fn enumerate_two_modes_one_photon() {
        let basis = enumerate_basis(2, 1).unwrap();
        assert_eq!(basis, vec![fock(&[1, 0]), fock(&[0, 1])]);
    }

    #[test]
    fn enumerate_two_modes_four_photons() {
        let basis = enumerate_basis(2, 4).unwrap();
        let expected: Vec<FockState> = [[4, 0], [3, 1], [2, 2], [1, 3], [0, 4]]
            .iter()
            .map(|o| fock(o))
            .collect();
        assert_eq!(basis, expected);
    }

    #[test]
    fn enumerate_four_modes_three_photons() {
        // Oracle: exhaustive scan of every candidate occupation list.
        let mut expected = 0usize;
        for a in 0..=3u32 {
            for b in 0..=3u32 {
                for c in 0..=3u32 {
                    for d in 0..=3u32 {
                        if a + b + c + d == 3 {
                            expected += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(expected, 20);
        let basis = enumerate_basis(4, 3).unwrap();
        assert_eq!(basis.len(), expected);
    }

    #[test]
    fn enumerate_rejects_zero_modes() {
        assert_eq!(enumerate_basis(0, 2), Err(FockError::NoModes));
    }

    #[test]
    fn enumerate_counts_and_order() {
        for m in 1..=5usize {
            for n in 0..=5u32 {
                let basis = enumerate_basis(m, n).unwrap();
                let expected = binomial(n as u64 + m as u64 - 1, m as u64 - 1) as usize;
                assert_eq!(basis.len(), expected, "m={m} n={n}");
                for s in &basis {
                    assert_eq!(s.total_photons(), n);
                }
                for w in basis.windows(2) {
                    assert!(w[0] < w[1], "not in canonical order: {} {}", w[0], w[1]);
                    assert!(w[0].occupations() > w[1].occupations());
                }
            }
        }
    }

    #[test]
    fn inner_product_orthonormal_basis() {
        let a = FockVector::from_occupations(&[1, 0]).unwrap();
        let b = FockVector::from_occupations(&[0, 1]).unwrap();
        assert_eq!(a.inner_product(&a).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(a.inner_product(&b).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn inner_product_normalized_superposition() {
        let s = 0.5f64.sqrt();
        let psi = FockVector::from_terms(
            2,
            [
                (fock(&[1, 0]), Complex64::new(s, 0.0)),
                (fock(&[0, 1]), Complex64::new(0.0, s)),
            ],
        )
        .unwrap();
        let ip = psi.inner_product(&psi).unwrap();
        assert!((ip.re - 1.0).abs() < NORM_TOL);
        assert!(ip.im.abs() < NORM_TOL);
    }

    #[test]
    fn inner_product_conjugate_linear_in_first_argument() {
        let a = FockVector::from_terms(
            2,
            [
                (fock(&[1, 0]), Complex64::new(0.3, 0.4)),
                (fock(&[0, 1]), Complex64::new(-0.1, 0.9)),
            ],
        )
        .unwrap();
        let b = FockVector::from_terms(
            2,
            [
                (fock(&[1, 0]), Complex64::new(0.7, -0.2)),
                (fock(&[0, 1]), Complex64::new(0.5, 0.1)),
            ],
        )
        .unwrap();
        let ab = a.inner_product(&b).unwrap();
        let ba = b.inner_product(&a).unwrap();
        assert!((ab - ba.conj()).norm() < NORM_TOL);
        // ⟨2a|b⟩ = 2*conj applied to first slot
        let a2 = a.scaled(Complex64::new(0.0, 2.0));
        let ab2 = a2.inner_product(&b).unwrap();
        assert!((ab2 - ab * Complex64::new(0.0, -2.0)).norm() < NORM_TOL);
    }

    #[test]
    fn inner_product_rejects_mode_mismatch() {
        let a = FockVector::from_occupations(&[1, 0]).unwrap();
        let b = FockVector::from_occupations(&[1, 0, 0]).unwrap();
        assert!(matches!(
            a.inner_product(&b),
            Err(FockError::ModeMismatch { .. })
        ));
    }

    #[test]
    fn normalize_scaled_basis_state() {
        let v = FockVector::from_occupations(&[1, 0])
            .unwrap()
            .scaled(Complex64::new(2.0, 0.0));
        let n = v.normalized().unwrap();
        assert!((n.amplitude(&fock(&[1, 0])) - Complex64::new(1.0, 0.0)).norm() < NORM_TOL);
    }

    #[test]
    fn normalize_noon_superposition() {
        let v = FockVector::from_terms(
            2,
            [
                (fock(&[4, 0]), Complex64::new(1.0, 0.0)),
                (fock(&[0, 4]), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let n = v.normalized().unwrap();
        let expect = Complex64::new(0.5f64.sqrt(), 0.0);
        assert!((n.amplitude(&fock(&[4, 0])) - expect).norm() < NORM_TOL);
        assert!((n.amplitude(&fock(&[0, 4])) - expect).norm() < NORM_TOL);
    }

    #[test]
    fn normalize_uneven_weights() {
        let v = FockVector::from_terms(
            2,
            [
                (fock(&[2, 0]), Complex64::new(3.0f64.sqrt(), 0.0)),
                (fock(&[0, 2]), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let n = v.normalized().unwrap();
        assert!((n.amplitude(&fock(&[2, 0])).norm_sqr() - 0.75).abs() < NORM_TOL);
        assert!((n.amplitude(&fock(&[0, 2])).norm_sqr() - 0.25).abs() < NORM_TOL);
    }

    #[test]
    fn normalize_zero_vector_fails() {
        let v = FockVector::zero(2).unwrap();
        assert_eq!(v.normalized().unwrap_err(), FockError::ZeroNorm);
    }

    #[test]
    fn normalize_is_idempotent() {
        let v = FockVector::from_terms(
            3,
            [
                (fock(&[2, 0, 1]), Complex64::new(0.2, -1.3)),
                (fock(&[0, 3, 0]), Complex64::new(-0.7, 0.4)),
                (fock(&[1, 1, 1]), Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap();
        let once = v.normalized().unwrap();
        let twice = once.normalized().unwrap();
        for (state, amp) in once.terms() {
            assert!((amp - twice.amplitude(state)).norm() < NORM_TOL);
        }
        assert!((once.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn record_roundtrip_preserves_canonical_order() {
        let v = FockVector::from_terms(
            2,
            [
                (fock(&[0, 2]), Complex64::new(0.5, 0.0)),
                (fock(&[2, 0]), Complex64::new(0.5, -0.5)),
                (fock(&[1, 1]), Complex64::new(0.0, 0.5f64.sqrt())),
            ],
        )
        .unwrap();
        let record = v.to_record();
        let order: Vec<&[u32]> = record
            .terms
            .iter()
            .map(|t| t.occupations.as_slice())
            .collect();
        assert_eq!(order, vec![&[2, 0][..], &[1, 1][..], &[0, 2][..]]);
        let back = FockVector::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn record_rejects_unknown_schema() {
        let mut record = FockVector::from_occupations(&[1, 0]).unwrap().to_record();
        record.schema = "photonsim.fock.v0".into();
        assert!(matches!(
            FockVector::from_record(&record),
            Err(FockError::BadRecord(_))
        ));
    }
}
