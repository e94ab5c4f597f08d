//! Instrument calibration and fringe analysis: the quartic phase–voltage
//! fit, sinusoid fringe fits and contrast extraction, quantum-interference
//! dip visibility, the standard-quantum-limit contrast threshold, and the
//! contrast-to-average-fidelity conversion.
//!
//! Contrast and visibility are deliberately kept as distinct quantities:
//! contrast is `(max−min)/(max+min)` of a fitted fringe, dip visibility is
//! `(N_max−N_min)/N_max` of a fitted dip against its baseline.

mod fit;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fit::{levenberg_marquardt, weighted_linear_fit, LmOptions, Observation};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("harmonic must be 1, 2 or 4, got {0}")]
    BadHarmonic(u32),
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("settings span {spanned:.4} but one period of harmonic {harmonic} needs {required:.4}")]
    InsufficientSpan {
        spanned: f64,
        required: f64,
        harmonic: u32,
    },
    #[error("count series is constant; nothing to fit")]
    DegenerateData,
    #[error("setting kind {got:?} does not match the expected {expected:?}")]
    WrongSettingKind {
        expected: SettingKind,
        got: SettingKind,
    },
    #[error("normal equations are singular")]
    SingularFit,
}

/// Quartic phase–voltage calibration `φ(V) = α + βV² + γV³ + δV⁴`.
///
/// The fitted sign convention is canonical: `β ≥ 0`, i.e. phase increases
/// with voltage (the interference data alone cannot distinguish `φ(V)` from
/// `−φ(V)`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVoltageModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainties: Option<[f64; 4]>,
}

/// Voltage range over which the quartic form is calibrated.
pub const CALIBRATED_VOLTAGE_RANGE: (f64, f64) = (0.0, 5.0);

impl PhaseVoltageModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
            uncertainties: None,
        }
    }

    /// `φ(V)` in radians.
    pub fn eval(&self, volts: f64) -> f64 {
        self.alpha + volts * volts * (self.beta + volts * (self.gamma + volts * self.delta))
    }

    /// True when `volts` lies outside the calibrated range; callers should
    /// treat the evaluation as an extrapolation and warn.
    pub fn extrapolates(&self, volts: f64) -> bool {
        volts < CALIBRATED_VOLTAGE_RANGE.0 || volts > CALIBRATED_VOLTAGE_RANGE.1
    }

    fn shifted(&self, offset: f64) -> Self {
        Self {
            alpha: self.alpha + offset,
            ..*self
        }
    }

    fn negated(&self) -> Self {
        Self {
            alpha: -self.alpha,
            beta: -self.beta,
            gamma: -self.gamma,
            delta: -self.delta,
            uncertainties: self.uncertainties,
        }
    }
}

/// What the sweep axis of a dataset means.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingKind {
    Voltage,
    Phase,
    Delay,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePoint {
    pub setting: f64,
    pub counts: u64,
    pub error: f64,
}

/// A measured (setting, counts, error) series.
#[derive(Clone, Debug, PartialEq)]
pub struct FringeData {
    pub setting_kind: SettingKind,
    pub points: Vec<FringePoint>,
}

impl FringeData {
    /// Build from raw counts with Poissonian errors `σ = √counts`.
    pub fn poissonian(setting_kind: SettingKind, series: &[(f64, u64)]) -> Self {
        Self {
            setting_kind,
            points: series
                .iter()
                .map(|&(setting, counts)| FringePoint {
                    setting,
                    counts,
                    error: (counts as f64).sqrt(),
                })
                .collect(),
        }
    }

    fn observations(&self) -> Vec<Observation> {
        self.points
            .iter()
            .map(|p| Observation {
                x: p.setting,
                y: p.counts as f64,
                // Zero-count bins get unit σ so weights stay finite.
                sigma: if p.error > 0.0 { p.error } else { 1.0 },
            })
            .collect()
    }

    fn count_span(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &self.points {
            min = min.min(p.counts as f64);
            max = max.max(p.counts as f64);
        }
        (min, max)
    }

    fn setting_span(&self) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &self.points {
            min = min.min(p.setting);
            max = max.max(p.setting);
        }
        max - min
    }
}

/// Result of a sinusoid fringe fit `counts ≈ A·[1 + C·cos(kφ + φ₀)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub contrast: f64,
    pub contrast_stderr: f64,
    pub phase_offset: f64,
    pub harmonic: u32,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FringeFit {
    pub fn chi2_per_dof(&self) -> f64 {
        if self.dof > 0 {
            self.chi2 / self.dof as f64
        } else {
            f64::NAN
        }
    }
}

fn check_harmonic(harmonic: u32) -> Result<(), AnalysisError> {
    if matches!(harmonic, 1 | 2 | 4) {
        Ok(())
    } else {
        Err(AnalysisError::BadHarmonic(harmonic))
    }
}

/// Weighted least-squares sinusoid fit at a fixed harmonic on phase-swept
/// data. Contrast is `(fit_max − fit_min)/(fit_max + fit_min)` of the fitted
/// curve, which for this model is just `C`.
pub fn fit_fringe(data: &FringeData, harmonic: u32) -> Result<FringeFit, AnalysisError> {
    check_harmonic(harmonic)?;
    if data.setting_kind != SettingKind::Phase {
        return Err(AnalysisError::WrongSettingKind {
            expected: SettingKind::Phase,
            got: data.setting_kind,
        });
    }
    if data.points.len() < 4 {
        return Err(AnalysisError::InsufficientData {
            needed: 4,
            got: data.points.len(),
        });
    }
    let required = 2.0 * PI / harmonic as f64;
    let spanned = data.setting_span();
    if spanned + 1e-9 < required {
        return Err(AnalysisError::InsufficientSpan {
            spanned,
            required,
            harmonic,
        });
    }

    // Linear in the (1, cos kφ, sin kφ) basis.
    let k = harmonic as f64;
    let basis = move |x: f64, phi: &mut [f64]| {
        phi[0] = 1.0;
        phi[1] = (k * x).cos();
        phi[2] = (k * x).sin();
    };
    let observations = data.observations();
    let (coeffs, covariance, chi2) =
        weighted_linear_fit(&basis, &observations, 3).ok_or(AnalysisError::SingularFit)?;
    let (a0, a1, a2) = (coeffs[0], coeffs[1], coeffs[2]);
    if a0 <= 0.0 {
        return Err(AnalysisError::DegenerateData);
    }
    let ripple = a1.hypot(a2);
    let contrast = ripple / a0;
    let phase_offset = (-a2).atan2(a1);

    // Propagate var(C) from the coefficient covariance.
    let grad = if ripple > 0.0 {
        [-contrast / a0, a1 / (ripple * a0), a2 / (ripple * a0)]
    } else {
        [0.0, 1.0 / a0, 1.0 / a0]
    };
    let mut var_c = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var_c += grad[i] * covariance[i * 3 + j] * grad[j];
        }
    }

    Ok(FringeFit {
        amplitude: a0,
        contrast,
        contrast_stderr: var_c.max(0.0).sqrt(),
        phase_offset,
        harmonic,
        chi2,
        dof: data.points.len().saturating_sub(3),
        iterations: 1,
        converged: true,
    })
}

/// Outcome of the nonlinear phase–voltage calibration fit.
#[derive(Clone, Debug)]
pub struct CalibrationFit {
    pub model: PhaseVoltageModel,
    pub fringe: FringeFit,
}

/// Fit `counts ≈ A·[1 + C·cos(k·φ(V))]` with `φ(V) = α + βV² + γV³ + δV⁴`
/// to voltage-swept fringe data by damped Gauss-Newton with analytic
/// Jacobians.
///
/// Starting point policy (fixed, so the fit is deterministic): `β` from a
/// coarse frequency scan of the count series, `α` from the phase of the
/// scan's best linear fit at `V = 0`, `γ = δ = 0`. The fitted `α` is only
/// determined modulo `π/k·2` by this data; see [`resolve_phase_branch`].
pub fn fit_phase_voltage(
    data: &FringeData,
    harmonic: u32,
) -> Result<CalibrationFit, AnalysisError> {
    check_harmonic(harmonic)?;
    if data.setting_kind != SettingKind::Voltage {
        return Err(AnalysisError::WrongSettingKind {
            expected: SettingKind::Voltage,
            got: data.setting_kind,
        });
    }
    if data.points.len() < 12 {
        return Err(AnalysisError::InsufficientData {
            needed: 12,
            got: data.points.len(),
        });
    }
    let (count_min, count_max) = data.count_span();
    if count_max - count_min <= 1e-6 * (count_max + count_min).max(1.0) {
        return Err(AnalysisError::DegenerateData);
    }

    let observations = data.observations();
    let k = harmonic as f64;
    let v_max = data
        .points
        .iter()
        .map(|p| p.setting.abs())
        .fold(0.0f64, f64::max)
        .max(1e-9);

    // Coarse frequency scan: for trial β values, fit the linear
    // (1, cos kβV², sin kβV²) model and keep the best.
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0, 0.0); // (chi2, beta, a0, a1, a2)
    for step in 1..=240 {
        let swing = 0.25 + (6.0 * PI - 0.25) * step as f64 / 240.0;
        let beta = swing / (k * v_max * v_max);
        let basis = move |x: f64, phi: &mut [f64]| {
            let arg = k * beta * x * x;
            phi[0] = 1.0;
            phi[1] = arg.cos();
            phi[2] = arg.sin();
        };
        if let Some((coeffs, _, chi2)) = weighted_linear_fit(&basis, &observations, 3)
            && chi2 < best.0
            && coeffs[0] > 0.0
        {
            best = (chi2, beta, coeffs[0], coeffs[1], coeffs[2]);
        }
    }
    if !best.0.is_finite() {
        return Err(AnalysisError::SingularFit);
    }
    let (_, beta0, a0, a1, a2) = best;
    let alpha0 = (-a2).atan2(a1) / k;
    let amp0 = a0.max(1.0);
    let contrast0 = (a1.hypot(a2) / amp0).clamp(0.05, 1.0);

    // Full nonlinear fit over (A, C, α, β, γ, δ).
    let eval = move |p: &[f64], v: f64, grad: &mut [f64]| -> f64 {
        let (amp, con, alpha, beta, gamma, delta) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        let phase = alpha + v * v * (beta + v * (gamma + v * delta));
        let arg = k * phase;
        let (sin, cos) = arg.sin_cos();
        grad[0] = 1.0 + con * cos;
        grad[1] = amp * cos;
        let d_phase = -amp * con * k * sin;
        grad[2] = d_phase;
        grad[3] = d_phase * v * v;
        grad[4] = d_phase * v * v * v;
        grad[5] = d_phase * v * v * v * v;
        amp * (1.0 + con * cos)
    };
    let start = [amp0, contrast0, alpha0, beta0, 0.0, 0.0];
    let lm = levenberg_marquardt(&eval, &observations, &start, &LmOptions::default());

    let mut amplitude = lm.params[0];
    let mut contrast = lm.params[1];
    let mut model = PhaseVoltageModel {
        alpha: lm.params[2],
        beta: lm.params[3],
        gamma: lm.params[4],
        delta: lm.params[5],
        uncertainties: Some([lm.stderr(2), lm.stderr(3), lm.stderr(4), lm.stderr(5)]),
    };
    // Canonical form: positive fringe amplitude and contrast, increasing phase.
    if amplitude < 0.0 {
        amplitude = -amplitude;
        contrast = -contrast;
    }
    if contrast < 0.0 {
        contrast = -contrast;
        model = model.shifted(PI / k);
    }
    if model.beta < 0.0 {
        model = model.negated();
    }
    // Fold α into (−π, π].
    model.alpha = wrap_angle(model.alpha);

    let fitted_span = k * (model.eval(v_max) - model.eval(0.0)).abs();
    if fitted_span + 1e-9 < 2.0 * PI {
        return Err(AnalysisError::InsufficientSpan {
            spanned: fitted_span,
            required: 2.0 * PI,
            harmonic,
        });
    }

    Ok(CalibrationFit {
        model,
        fringe: FringeFit {
            amplitude,
            contrast,
            contrast_stderr: lm.stderr(1),
            phase_offset: 0.0,
            harmonic,
            chi2: lm.chi2,
            dof: data.points.len().saturating_sub(6),
            iterations: lm.iterations,
            converged: lm.converged,
        },
    })
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Outcome of the modulo-2π branch disambiguation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchResolution {
    pub model: PhaseVoltageModel,
    /// True when the `α + π` branch won.
    pub branch_flipped: bool,
    /// True when the two branches fit the 1-photon data equally well; the
    /// unflipped branch is then kept by convention.
    pub ambiguous: bool,
    pub residuals: [f64; 2],
}

/// Resolve the modulo-π ambiguity of a 2-photon calibration to modulo 2π
/// using a 1-photon dataset taken at the first output port, whose rate
/// follows `A·(1 − C·cos φ(V))`.
///
/// Both candidate branches (`α`, `α + π`) are fitted linearly with the model
/// shape above; the branch with the smaller weighted residual wins. Branches
/// whose best fit has the wrong fringe sign are penalized to a constant fit.
pub fn resolve_phase_branch(
    model: &PhaseVoltageModel,
    one_photon: &FringeData,
) -> Result<BranchResolution, AnalysisError> {
    if one_photon.setting_kind != SettingKind::Voltage {
        return Err(AnalysisError::WrongSettingKind {
            expected: SettingKind::Voltage,
            got: one_photon.setting_kind,
        });
    }
    if one_photon.points.len() < 4 {
        return Err(AnalysisError::InsufficientData {
            needed: 4,
            got: one_photon.points.len(),
        });
    }
    let observations = one_photon.observations();
    let mut residuals = [f64::INFINITY; 2];
    for (branch, slot) in residuals.iter_mut().enumerate() {
        let candidate = model.shifted(branch as f64 * PI);
        let basis = move |v: f64, phi: &mut [f64]| {
            phi[0] = 1.0;
            phi[1] = candidate.eval(v).cos();
        };
        let Some((coeffs, _, chi2)) = weighted_linear_fit(&basis, &observations, 2) else {
            continue;
        };
        // Port convention: counts fall as cos φ rises, so the cosine
        // coefficient must be negative. A wrong-sign branch is held to the
        // constant-only fit.
        if coeffs[1] <= 0.0 {
            *slot = chi2;
        } else {
            let constant = |_: f64, phi: &mut [f64]| phi[0] = 1.0;
            if let Some((_, _, chi2_const)) = weighted_linear_fit(&constant, &observations, 1) {
                *slot = chi2_const;
            }
        }
    }
    if !residuals[0].is_finite() && !residuals[1].is_finite() {
        return Err(AnalysisError::SingularFit);
    }
    let flipped = residuals[1] < residuals[0];
    let scale = residuals[0].max(residuals[1]);
    let floor = 1e-9 * observations.len() as f64;
    let ambiguous = (residuals[0] - residuals[1]).abs() <= 0.01 * scale + floor;
    let chosen = if flipped && !ambiguous {
        model.shifted(PI)
    } else {
        *model
    };
    Ok(BranchResolution {
        model: PhaseVoltageModel {
            alpha: wrap_angle(chosen.alpha),
            ..chosen
        },
        branch_flipped: flipped && !ambiguous,
        ambiguous,
        residuals,
    })
}

/// Result of a quantum-interference dip fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomFit {
    /// `(N_max − N_min)/N_max` from the fitted baseline and dip floor.
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub baseline: f64,
    pub dip_center: f64,
    pub dip_width: f64,
    /// False when the dip floor is indistinguishable from the baseline.
    pub dip_resolved: bool,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fit `N(τ) = B·(1 − V·exp(−(π/2)((τ−τ₀)/w)²))` to delay-swept coincidence
/// counts and report the dip visibility `V = (N_max − N_min)/N_max`.
///
/// The scan must include baseline points far from zero delay; a dip wider
/// than the scan or a floor indistinguishable from the baseline is flagged
/// via `dip_resolved = false`.
pub fn hom_visibility(data: &FringeData) -> Result<HomFit, AnalysisError> {
    if data.setting_kind != SettingKind::Delay {
        return Err(AnalysisError::WrongSettingKind {
            expected: SettingKind::Delay,
            got: data.setting_kind,
        });
    }
    if data.points.len() < 8 {
        return Err(AnalysisError::InsufficientData {
            needed: 8,
            got: data.points.len(),
        });
    }
    let observations = data.observations();

    // Starting values: dip center at the count minimum, baseline from the
    // quarter of points farthest from it.
    let center0 = data
        .points
        .iter()
        .min_by(|a, b| a.counts.cmp(&b.counts))
        .map(|p| p.setting)
        .unwrap_or(0.0);
    let mut by_distance: Vec<&FringePoint> = data.points.iter().collect();
    by_distance.sort_by(|a, b| {
        (b.setting - center0)
            .abs()
            .total_cmp(&(a.setting - center0).abs())
    });
    let far = &by_distance[..(data.points.len() / 4).max(2)];
    let baseline0 = far.iter().map(|p| p.counts as f64).sum::<f64>() / far.len() as f64;
    let min_count = data.points.iter().map(|p| p.counts).min().unwrap_or(0) as f64;
    if baseline0 <= 0.0 {
        return Err(AnalysisError::DegenerateData);
    }
    let depth0 = (1.0 - min_count / baseline0).clamp(0.0, 1.0);
    if depth0 < 1e-9 {
        // Flat series: no dip to resolve.
        return Ok(HomFit {
            visibility: 0.0,
            visibility_stderr: 0.0,
            baseline: baseline0,
            dip_center: center0,
            dip_width: data.setting_span(),
            dip_resolved: false,
            chi2: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let width0 = (data.setting_span() / 6.0).max(1e-9);

    let eval = |p: &[f64], tau: f64, grad: &mut [f64]| -> f64 {
        let (base, vis, center, width) = (p[0], p[1], p[2], p[3]);
        let u = (tau - center) / width;
        let g = (-FRAC_PI_2 * u * u).exp();
        grad[0] = 1.0 - vis * g;
        grad[1] = -base * g;
        grad[2] = -base * vis * g * PI * u / width;
        grad[3] = -base * vis * g * PI * u * u / width;
        base * (1.0 - vis * g)
    };
    let start = [baseline0, depth0, center0, width0];
    let lm = levenberg_marquardt(&eval, &observations, &start, &LmOptions::default());

    let baseline = lm.params[0];
    let visibility = lm.params[1];
    let width = lm.params[3].abs();
    // Baseline is only constrained when the farthest points sit well outside
    // the dip.
    let max_offset = data
        .points
        .iter()
        .map(|p| (p.setting - lm.params[2]).abs())
        .fold(0.0f64, f64::max);
    let resolved = visibility > 1e-9
        && visibility > 3.0 * lm.stderr(1).min(1.0)
        && max_offset > 2.0 * width;

    Ok(HomFit {
        visibility,
        visibility_stderr: lm.stderr(1),
        baseline,
        dip_center: lm.params[2],
        dip_width: width,
        dip_resolved: resolved,
        chi2: lm.chi2,
        iterations: lm.iterations,
        converged: lm.converged,
    })
}

/// Ideal dip visibility of two-photon interference at a coupler of
/// reflectivity `η`: `V = 2η(1−η)/(1−2η+2η²)`.
pub fn ideal_hom_visibility(eta: f64) -> f64 {
    2.0 * eta * (1.0 - eta) / (1.0 - 2.0 * eta + 2.0 * eta * eta)
}

/// Contrast threshold for beating the standard quantum limit.
pub const SQL_CONTRAST_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqlCheck {
    pub beats_sql: bool,
    /// `C − 1/√2`.
    pub margin: f64,
    pub threshold: f64,
    pub photon_number: u32,
}

/// Whether a fringe contrast clears the `1/√2` threshold required to beat
/// the standard quantum limit. The threshold is the same for every photon
/// number; `photon_number` is carried through for reporting.
pub fn contrast_beats_sql(contrast: f64, photon_number: u32) -> SqlCheck {
    SqlCheck {
        beats_sql: contrast > SQL_CONTRAST_THRESHOLD,
        margin: contrast - SQL_CONTRAST_THRESHOLD,
        threshold: SQL_CONTRAST_THRESHOLD,
        photon_number,
    }
}

/// Number of trapezoid points used by [`average_fidelity`].
pub const FIDELITY_QUADRATURE_POINTS: usize = 2001;

/// Average fidelity between the measured and ideal 1-photon output state
/// implied by a fringe of contrast `C`, averaged over `φ ∈ [−π/2, π/2]`.
///
/// The ideal output is `cos(φ/2)|0⟩ + i·sin(φ/2)|1⟩`. The contrast deficit
/// is attributed to a pure state with the same relative phase (no mixture,
/// no complex phase), rotated from the ideal one by a pointing error with
/// `sin(error) = (1−C)·cos φ`, so pointwise
/// `F(φ) = 1 − (1−C)²·cos²φ` and the range average is `1 − (1−C)²/2` up to
/// quadrature error (2001-point trapezoid, error ≪ 1e-9).
pub fn average_fidelity(contrast: f64) -> f64 {
    let deficit = (1.0 - contrast) * (1.0 - contrast);
    let n = FIDELITY_QUADRATURE_POINTS;
    let mut weighted_sum = 0.0;
    let mut weight_total = 0.0;
    for i in 0..n {
        let phi = -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64;
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let cos = phi.cos();
        weighted_sum += weight * (1.0 - deficit * cos * cos);
        weight_total += weight;
    }
    weighted_sum / weight_total
}
