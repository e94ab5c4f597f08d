//! Photon-pair source model: a two-mode emitter whose n-pair amplitudes fall
//! off geometrically with a dimensionless pair amplitude `λ`, truncated at a
//! configurable maximum pair number.
//!
//! The truncated state is `Σ_{n=0..n_max} c_n λⁿ |n,n⟩`, renormalized. The
//! baseline weight profile is `c_n = 1` (single-Schmidt-mode squeezed-vacuum
//! weights); [`SpdcSource::state_with_profile`] accepts other profiles.
//! `λ` grows monotonically with average pump power but the quantitative
//! mapping is left symbolic.

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{FockState, FockVector};

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("pair amplitude must lie in [0, 1), got {0}")]
    PairAmplitudeRange(f64),
    #[error("max_pairs must be at least 1")]
    MaxPairsZero,
    #[error("requested {pairs} pairs but the source truncates at {max_pairs}")]
    PairsExceedTruncation { pairs: u32, max_pairs: u32 },
    #[error("weight profile leaves the source state with zero norm")]
    ZeroState,
}

/// Two-mode pair source with geometric multi-pair amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdcSource {
    pair_amplitude: f64,
    max_pairs: u32,
}

impl SpdcSource {
    pub fn new(pair_amplitude: f64, max_pairs: u32) -> Result<Self, SourceError> {
        if !(0.0..1.0).contains(&pair_amplitude) {
            return Err(SourceError::PairAmplitudeRange(pair_amplitude));
        }
        if max_pairs == 0 {
            return Err(SourceError::MaxPairsZero);
        }
        Ok(Self {
            pair_amplitude,
            max_pairs,
        })
    }

    pub fn pair_amplitude(&self) -> f64 {
        self.pair_amplitude
    }

    pub fn max_pairs(&self) -> u32 {
        self.max_pairs
    }

    /// Normalized truncated emission state with the baseline `c_n = 1` profile.
    pub fn state(&self) -> FockVector {
        self.state_with_profile(|_| 1.0)
            .expect("baseline profile has non-zero vacuum weight")
    }

    /// Normalized truncated emission state with amplitudes `c_n λⁿ`.
    pub fn state_with_profile(
        &self,
        profile: impl Fn(u32) -> f64,
    ) -> Result<FockVector, SourceError> {
        let mut v = FockVector::zero(2).expect("two modes");
        for n in 0..=self.max_pairs {
            let weight = profile(n) * self.pair_amplitude.powi(n as i32);
            if weight == 0.0 {
                continue;
            }
            let state = FockState::new(vec![n, n]).expect("two modes");
            v.add_term(state, Complex64::new(weight, 0.0))
                .expect("mode counts match");
        }
        v.normalized().map_err(|_| SourceError::ZeroState)
    }

    /// The pure `|pairs, pairs⟩` term, normalized: ideal heralded operation
    /// used for the noiseless fringe predictions.
    pub fn post_selected_input(&self, pairs: u32) -> Result<FockVector, SourceError> {
        if pairs > self.max_pairs {
            return Err(SourceError::PairsExceedTruncation {
                pairs,
                max_pairs: self.max_pairs,
            });
        }
        Ok(FockVector::from_occupations(&[pairs, pairs]).expect("two modes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::NORM_TOL;

    fn fock(occ: &[u32]) -> FockState {
        FockState::new(occ.to_vec()).unwrap()
    }

    #[test]
    fn zero_pump_gives_vacuum() {
        let src = SpdcSource::new(0.0, 3).unwrap();
        let state = src.state();
        assert!((state.amplitude(&fock(&[0, 0])).norm() - 1.0).abs() < NORM_TOL);
        assert_eq!(state.pruned().term_count(), 1);
    }

    #[test]
    fn amplitude_ratios_are_geometric() {
        let src = SpdcSource::new(0.1, 3).unwrap();
        let state = src.state();
        let a11 = state.amplitude(&fock(&[1, 1]));
        let a22 = state.amplitude(&fock(&[2, 2]));
        let a33 = state.amplitude(&fock(&[3, 3]));
        assert!(((a22 / a11).re - 0.1).abs() < 1e-12);
        assert!((a33.norm_sqr() / a22.norm_sqr() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn state_is_normalized_across_parameters() {
        for &lambda in &[0.0, 0.05, 0.3, 0.7, 0.95] {
            for max_pairs in 1..=5 {
                let src = SpdcSource::new(lambda, max_pairs).unwrap();
                assert!(
                    (src.state().norm() - 1.0).abs() < NORM_TOL,
                    "lambda={lambda} max_pairs={max_pairs}"
                );
            }
        }
    }

    #[test]
    fn conditional_state_approaches_single_pair_at_low_pump() {
        // Given at least one pair, the weight of higher-order terms scales as λ².
        for &lambda in &[0.1, 0.03, 0.01] {
            let state = SpdcSource::new(lambda, 3).unwrap().state();
            let p1 = state.amplitude(&fock(&[1, 1])).norm_sqr();
            let higher: f64 = (2..=3)
                .map(|n| state.amplitude(&fock(&[n, n])).norm_sqr())
                .sum();
            let ratio = higher / p1;
            assert!(ratio < 1.5 * lambda * lambda, "lambda={lambda}");
        }
    }

    #[test]
    fn post_selected_inputs() {
        let src = SpdcSource::new(0.2, 3).unwrap();
        for pairs in 0..=3u32 {
            let state = src.post_selected_input(pairs).unwrap();
            assert!((state.amplitude(&fock(&[pairs, pairs])).norm() - 1.0).abs() < NORM_TOL);
        }
        assert_eq!(
            src.post_selected_input(4),
            Err(SourceError::PairsExceedTruncation {
                pairs: 4,
                max_pairs: 3
            })
        );
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(
            SpdcSource::new(1.0, 3),
            Err(SourceError::PairAmplitudeRange(1.0))
        );
        assert_eq!(
            SpdcSource::new(-0.1, 3),
            Err(SourceError::PairAmplitudeRange(-0.1))
        );
        assert_eq!(SpdcSource::new(0.5, 0), Err(SourceError::MaxPairsZero));
    }

    #[test]
    fn custom_profile_can_zero_the_state() {
        let src = SpdcSource::new(0.5, 2).unwrap();
        assert_eq!(
            src.state_with_profile(|_| 0.0),
            Err(SourceError::ZeroState)
        );
    }
}
