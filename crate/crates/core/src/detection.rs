//! From output states to measurable events: post-selection patterns,
//! detector efficiency, splitter-tree cascades for non-number-resolving
//! detectors, photon distinguishability, and Poissonian count sampling.
//!
//! Two loss paths are provided. For ideal heralded inputs, efficiency is a
//! pure scale factor on count rates ([`apply_efficiency`]); fringe shape and
//! contrast are untouched. For multi-pair contamination, loss must instead be
//! applied as binomial thinning of the output occupations *before* pattern
//! matching ([`thinned_pattern_probability`]), because higher photon-number
//! terms then masquerade as lower-number events and show up as spurious
//! counts.
//!
//! All stochastic sampling goes through an explicit, caller-seeded
//! [`ChaCha8Rng`]; there is no hidden global generator.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::circuit::{evolve, Circuit, CircuitError};
use crate::fock::{binomial, FockState, FockVector};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("pattern requires at least one monitored mode")]
    EmptyPattern,
    #[error("pattern monitors mode {0} more than once")]
    DuplicateMode(usize),
    #[error("pattern mode {index} out of range for {mode_count} modes")]
    ModeOutOfRange { index: usize, mode_count: usize },
    #[error("efficiency must lie in [0, 1], got {0}")]
    EfficiencyRange(f64),
    #[error("cascade tree must have at least one branch")]
    EmptyCascade,
    #[error("cascade branch probabilities must lie in (0, 1], got {0}")]
    BranchRange(f64),
    #[error("cascade branch probabilities sum to {0}, expected 1")]
    BranchSum(f64),
    #[error("overlap weight must lie in [0, 1], got {0}")]
    OverlapRange(f64),
    #[error("filter bandwidth must be positive, got {0}")]
    BandwidthRange(f64),
    #[error("center wavelength must be positive, got {0}")]
    WavelengthRange(f64),
    #[error("delay must be finite")]
    NonFiniteDelay,
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityRange(f64),
    #[error("distinguishable-mixture input must place exactly one photon in each of two modes")]
    NotPairInput,
    #[error("non-resolving pattern requires {required} photons on mode {mode} but its cascade has {branches} branch(es)")]
    CascadeArity {
        mode: usize,
        required: u32,
        branches: usize,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Required photon counts on a set of monitored output modes.
/// Modes not listed are unconstrained.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionPattern {
    requirements: Vec<(usize, u32)>,
}

impl DetectionPattern {
    /// `(mode, required photons)` pairs; modes must be distinct.
    pub fn new(requirements: impl IntoIterator<Item = (usize, u32)>) -> Result<Self, DetectionError> {
        let mut requirements: Vec<(usize, u32)> = requirements.into_iter().collect();
        if requirements.is_empty() {
            return Err(DetectionError::EmptyPattern);
        }
        requirements.sort_by_key(|&(mode, _)| mode);
        for pair in requirements.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(DetectionError::DuplicateMode(pair[0].0));
            }
        }
        Ok(Self { requirements })
    }

    pub fn requirements(&self) -> &[(usize, u32)] {
        &self.requirements
    }

    /// Total photons the pattern post-selects on.
    pub fn total_photons(&self) -> u32 {
        self.requirements.iter().map(|&(_, n)| n).sum()
    }

    pub fn max_mode(&self) -> usize {
        self.requirements.last().map(|&(m, _)| m).unwrap_or(0)
    }

    pub fn matches(&self, state: &FockState) -> bool {
        self.requirements
            .iter()
            .all(|&(mode, n)| state.occupation(mode) == n)
    }

    fn check_range(&self, mode_count: usize) -> Result<(), DetectionError> {
        if self.max_mode() >= mode_count {
            return Err(DetectionError::ModeOutOfRange {
                index: self.max_mode(),
                mode_count,
            });
        }
        Ok(())
    }
}

/// Spectral-filter overlap model: the pairwise indistinguishability
/// `|γ(τ)|²` of two photons at relative optical path difference `τ` (μm).
///
/// The coherence length is `l_c = λ₀²/Δλ`. Shapes:
/// gaussian `|γ(τ)|² = exp(−(π/2)(τ/l_c)²)`,
/// sinc² `|γ(τ)|² = sinc²((π/2)(τ/l_c))` for etalon-like filters.
/// Both satisfy `|γ(0)|² = 1` and vanish as `|τ| → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapModel {
    center_wavelength_nm: f64,
    bandwidth_nm: f64,
    shape: FilterShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterShape {
    Gaussian,
    Sinc2,
}

impl OverlapModel {
    pub fn new(
        center_wavelength_nm: f64,
        bandwidth_nm: f64,
        shape: FilterShape,
    ) -> Result<Self, DetectionError> {
        if center_wavelength_nm <= 0.0 || center_wavelength_nm.is_nan() {
            return Err(DetectionError::WavelengthRange(center_wavelength_nm));
        }
        if bandwidth_nm <= 0.0 || bandwidth_nm.is_nan() {
            return Err(DetectionError::BandwidthRange(bandwidth_nm));
        }
        Ok(Self {
            center_wavelength_nm,
            bandwidth_nm,
            shape,
        })
    }

    /// `l_c = λ₀²/Δλ` in μm.
    pub fn coherence_length_um(&self) -> f64 {
        self.center_wavelength_nm * self.center_wavelength_nm / self.bandwidth_nm / 1000.0
    }

    /// `|γ(τ)|²` for a path difference `τ` in μm.
    pub fn overlap(&self, delay_um: f64) -> Result<f64, DetectionError> {
        if !delay_um.is_finite() {
            return Err(DetectionError::NonFiniteDelay);
        }
        let x = std::f64::consts::FRAC_PI_2 * delay_um / self.coherence_length_um();
        Ok(match self.shape {
            FilterShape::Gaussian => (-x * x * 2.0 / std::f64::consts::PI).exp(),
            FilterShape::Sinc2 => {
                if x == 0.0 {
                    1.0
                } else {
                    (x.sin() / x).powi(2)
                }
            }
        })
    }
}

/// Detector behaviour per monitored mode: one shared quantum efficiency,
/// number resolution, and optional splitter-tree cascades.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel {
    efficiency: f64,
    number_resolving: bool,
    cascades: Vec<(usize, Vec<f64>)>,
}

impl DetectorModel {
    /// Unit-efficiency number-resolving detectors.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            number_resolving: true,
            cascades: Vec::new(),
        }
    }

    pub fn new(efficiency: f64, number_resolving: bool) -> Result<Self, DetectionError> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(DetectionError::EfficiencyRange(efficiency));
        }
        Ok(Self {
            efficiency,
            number_resolving,
            cascades: Vec::new(),
        })
    }

    /// Attach a splitter-tree cascade on `mode` with the given terminal-branch
    /// probabilities (each in (0,1], summing to 1).
    pub fn with_cascade(mut self, mode: usize, branches: Vec<f64>) -> Result<Self, DetectionError> {
        validate_branches(&branches)?;
        self.cascades.retain(|&(m, _)| m != mode);
        self.cascades.push((mode, branches));
        self.cascades.sort_by_key(|&(m, _)| m);
        Ok(self)
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn number_resolving(&self) -> bool {
        self.number_resolving
    }

    /// Branch probabilities for `mode`; a bare detector is a single branch.
    pub fn cascade_for(&self, mode: usize) -> &[f64] {
        self.cascades
            .iter()
            .find(|&&(m, _)| m == mode)
            .map(|(_, b)| b.as_slice())
            .unwrap_or(&[1.0])
    }
}

fn validate_branches(branches: &[f64]) -> Result<(), DetectionError> {
    if branches.is_empty() {
        return Err(DetectionError::EmptyCascade);
    }
    for &p in branches {
        if !(p > 0.0 && p <= 1.0) {
            return Err(DetectionError::BranchRange(p));
        }
    }
    let sum: f64 = branches.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DetectionError::BranchSum(sum));
    }
    Ok(())
}

/// Probability of the pattern under exact photon counting:
/// `Σ |amplitude|²` over basis states matching the pattern.
pub fn outcome_probability(
    state: &FockVector,
    pattern: &DetectionPattern,
) -> Result<f64, DetectionError> {
    pattern.check_range(state.mode_count())?;
    let p = state
        .terms()
        .filter(|(s, _)| pattern.matches(s))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

/// Blend of quantum and classical two-photon transmission through a circuit.
///
/// `overlap = 1` is full quantum interference of the `|1,1⟩`-type input;
/// `overlap = 0` treats the two photons as independent classical particles
/// routed with probabilities `|U_ji|²`, summed over assignments matching the
/// pattern.
pub fn distinguishable_mixture_probability(
    circuit: &Circuit,
    input: &FockState,
    pattern: &DetectionPattern,
    overlap: f64,
) -> Result<f64, DetectionError> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(DetectionError::OverlapRange(overlap));
    }
    if input.total_photons() != 2 || input.occupations().iter().any(|&n| n > 1) {
        return Err(DetectionError::NotPairInput);
    }
    pattern.check_range(circuit.mode_count())?;
    let unitary = circuit.compose()?;

    let quantum = outcome_probability(
        &evolve(&FockVector::basis_state(input.clone()), &unitary)?,
        pattern,
    )?;

    let sources: Vec<usize> = input
        .occupations()
        .iter()
        .enumerate()
        .filter(|&(_, &n)| n == 1)
        .map(|(mode, _)| mode)
        .collect();
    let m = circuit.mode_count();
    let mut classical = 0.0;
    for j1 in 0..m {
        for j2 in 0..m {
            let mut occupations = vec![0u32; m];
            occupations[j1] += 1;
            occupations[j2] += 1;
            let out = FockState::new(occupations).expect("non-empty");
            if pattern.matches(&out) {
                classical += unitary.entry(j1, sources[0]).norm_sqr()
                    * unitary.entry(j2, sources[1]).norm_sqr();
            }
        }
    }

    Ok(overlap * quantum + (1.0 - overlap) * classical)
}

/// Probability that every terminal detector of a splitter tree receives at
/// least one photon, when each of `photons` photons independently takes
/// branch `i` with probability `branches[i]`.
///
/// Computed by multinomial inclusion–exclusion; for `photons == branches.len()`
/// this reduces to `k!·∏ pᵢ`. Fewer photons than branches gives 0.
pub fn cascade_click_probability(photons: u32, branches: &[f64]) -> Result<f64, DetectionError> {
    validate_branches(branches)?;
    Ok(subset_click_probability(photons, branches, 1.0))
}

/// Inclusion–exclusion core shared with the thinning path: each photon
/// reaches branch `i` with probability `survival·branches[i]` and is lost
/// otherwise; returns P(every branch receives ≥ 1 photon).
fn subset_click_probability(photons: u32, branches: &[f64], survival: f64) -> f64 {
    let k = branches.len();
    if (photons as usize) < k {
        return 0.0;
    }
    let mut total = 0.0f64;
    for subset in 0..(1u32 << k) {
        // Probability that no photon lands in any branch of `subset`.
        let blocked: f64 = branches
            .iter()
            .enumerate()
            .filter(|(i, _)| subset >> i & 1 == 1)
            .map(|(_, p)| p)
            .sum();
        let sign = if subset.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * (1.0 - survival * blocked).powi(photons as i32);
    }
    total.clamp(0.0, 1.0)
}

/// Scale an event probability by detector efficiency: one factor of
/// `efficiency` per detected photon. A pure scale on count rates; fringe
/// shape and contrast of ideal states are unaffected.
pub fn apply_efficiency(
    event_probability: f64,
    pattern: &DetectionPattern,
    model: &DetectorModel,
) -> f64 {
    event_probability * model.efficiency().powi(pattern.total_photons() as i32)
}

/// Event probability with loss applied as binomial thinning of the output
/// occupations before pattern matching.
///
/// For number-resolving detectors a monitored mode with `t` photons yields
/// the required count `r` with probability `C(t,r) η^r (1−η)^(t−r)`. For
/// non-resolving cascades the event is "every terminal detector clicks",
/// which higher-number terms can also trigger — the spurious-count mechanism
/// that degrades the fringe contrast at high pump power.
pub fn thinned_pattern_probability(
    state: &FockVector,
    pattern: &DetectionPattern,
    model: &DetectorModel,
) -> Result<f64, DetectionError> {
    pattern.check_range(state.mode_count())?;
    if !model.number_resolving() {
        for &(mode, required) in pattern.requirements() {
            let branches = model.cascade_for(mode).len();
            if required as usize != branches {
                return Err(DetectionError::CascadeArity {
                    mode,
                    required,
                    branches,
                });
            }
        }
    }
    let eta = model.efficiency();
    let mut total = 0.0f64;
    for (out_state, amplitude) in state.terms() {
        let weight = amplitude.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        let mut event = 1.0f64;
        for &(mode, required) in pattern.requirements() {
            let photons = out_state.occupation(mode);
            let factor = if model.number_resolving() {
                if photons < required {
                    0.0
                } else {
                    binomial(photons as u64, required as u64)
                        * eta.powi(required as i32)
                        * (1.0 - eta).powi((photons - required) as i32)
                }
            } else {
                subset_click_probability(photons, model.cascade_for(mode), eta)
            };
            event *= factor;
            if event == 0.0 {
                break;
            }
        }
        total += weight * event;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Poisson-distributed count with mean `probability · trials_per_point`,
/// drawn from the caller's seeded generator.
pub fn sample_counts(
    probability: f64,
    trials_per_point: u64,
    rng: &mut ChaCha8Rng,
) -> Result<u64, DetectionError> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(DetectionError::ProbabilityRange(probability));
    }
    let mean = probability * trials_per_point as f64;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).expect("positive finite mean");
    let draw: f64 = poisson.sample(rng);
    Ok(draw as u64)
}
