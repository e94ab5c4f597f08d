//! Scenario execution: sweeps, calibration orchestration and the
//! contamination study. Runs are pure functions of (scenario, overrides) —
//! all randomness flows through per-point generators derived from the
//! scenario seed, so outputs are byte-identical across repeated runs and
//! independent of evaluation order.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{
    render_contamination_csv, render_sweep_csv, render_sweep_json, SUMMARY_SCHEMA,
};
use super::{
    invalid, CircuitSpec, DetectionSpec, ElementSpec, InputSpec, LossModel, Scenario,
    ScenarioError, ScenarioKind, SweepKind,
};
use crate::analysis::{
    contrast_beats_sql, fit_fringe, fit_phase_voltage, hom_visibility, resolve_phase_branch,
    FringeData, FringeFit, FringePoint, PhaseVoltageModel, SettingKind,
};
use crate::circuit::{evolve, Circuit};
use crate::detection::{
    apply_efficiency, cascade_click_probability, distinguishable_mixture_probability,
    outcome_probability, sample_counts, thinned_pattern_probability, DetectionPattern,
    DetectorModel, OverlapModel,
};
use crate::fock::{FockState, FockVector};
use crate::source::SpdcSource;

/// The per-point random generator: a ChaCha8 stream keyed by the scenario
/// seed, with the stream index carrying the sweep-point index. Points can be
/// evaluated in any order (or in parallel) without changing any draw.
pub fn point_rng(seed: u64, point_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point_index);
    rng
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    /// Calibration model for voltage sweeps that reference a `model_file`;
    /// the caller loads the file (the runner itself does no IO).
    pub phase_model: Option<PhaseVoltageModel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn sweep_extension(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// One sweep point of the fixed output schema.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: f64,
    pub ideal_probability: f64,
    pub counts: u64,
    pub poisson_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub schema: String,
    pub scenario: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub trials_per_point: u64,
    pub points: usize,
    pub fit: SummaryFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummaryFit {
    /// Raw data only (calibration sweeps are fitted by `calibrate`).
    None,
    Fringe {
        harmonic: u32,
        amplitude: f64,
        contrast: f64,
        contrast_stderr: f64,
        phase_offset: f64,
        chi2_per_dof: f64,
        iterations: usize,
        converged: bool,
        beats_sql: bool,
        sql_margin: f64,
    },
    Dip {
        visibility: f64,
        visibility_stderr: f64,
        baseline: f64,
        dip_center: f64,
        dip_width: f64,
        dip_resolved: bool,
        converged: bool,
    },
    Visibility {
        min_visibility: f64,
        max_visibility: f64,
        peak_setting: f64,
    },
}

/// Everything a run produces, already rendered; the caller decides where the
/// bytes go.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: Summary,
    pub sweep_text: String,
    pub summary_text: String,
    pub sweep_filename: String,
    pub summary_filename: String,
}

struct Resolved {
    seed: u64,
    trials: u64,
    pattern: DetectionPattern,
    detector: DetectorModel,
}

fn resolve_common(
    scenario: &Scenario,
    overrides: &RunOverrides,
) -> Result<Resolved, ScenarioError> {
    let pattern = DetectionPattern::new(
        scenario
            .detection
            .pattern
            .iter()
            .map(|p| (p.mode, p.photons)),
    )?;
    Ok(Resolved {
        seed: overrides.seed.unwrap_or(scenario.seed),
        trials: overrides.trials.unwrap_or(scenario.trials_per_point),
        pattern,
        detector: detector_model(&scenario.detection)?,
    })
}

fn detector_model(spec: &DetectionSpec) -> Result<DetectorModel, ScenarioError> {
    let mut model = DetectorModel::new(spec.efficiency, spec.number_resolving)?;
    for cascade in &spec.cascade {
        model = model.with_cascade(cascade.mode, cascade.branches.clone())?;
    }
    Ok(model)
}

fn input_state(input: &InputSpec) -> Result<FockVector, ScenarioError> {
    Ok(match input {
        InputSpec::Fock { occupations } => FockVector::from_occupations(occupations)?,
        InputSpec::Spdc {
            pair_amplitude,
            max_pairs,
        } => SpdcSource::new(*pair_amplitude, *max_pairs)?.state(),
    })
}

fn input_fock_state(input: &InputSpec) -> Result<FockState, ScenarioError> {
    match input {
        InputSpec::Fock { occupations } => Ok(FockState::new(occupations.clone())?),
        InputSpec::Spdc { .. } => Err(invalid(
            "input",
            "this scenario kind needs a definite photon-number input",
        )),
    }
}

/// Build the concrete circuit, substituting `swept_value` into the swept
/// element when present.
fn realize_circuit(
    spec: &CircuitSpec,
    swept_value: Option<f64>,
) -> Result<Circuit, ScenarioError> {
    let mut circuit = Circuit::new(spec.mode_count)?;
    for element in &spec.elements {
        match element {
            ElementSpec::Coupler {
                modes,
                reflectivity,
                swept,
            } => {
                let eta = if *swept {
                    swept_value.ok_or_else(|| invalid("circuit", "missing sweep value"))?
                } else {
                    reflectivity
                        .ok_or_else(|| invalid("circuit", "coupler without reflectivity"))?
                };
                circuit.add_coupler(eta, (modes[0], modes[1]))?;
            }
            ElementSpec::Phase { mode, phase, swept } => {
                let phi = if *swept {
                    swept_value.ok_or_else(|| invalid("circuit", "missing sweep value"))?
                } else {
                    phase.ok_or_else(|| invalid("circuit", "phase shifter without phase"))?
                };
                circuit.add_phase_shift(phi, *mode)?;
            }
        }
    }
    Ok(circuit)
}

fn event_probability(
    output: &FockVector,
    pattern: &DetectionPattern,
    detector: &DetectorModel,
    loss_model: LossModel,
) -> Result<f64, ScenarioError> {
    Ok(match loss_model {
        LossModel::Scale => {
            let mut p = outcome_probability(output, pattern)?;
            p = apply_efficiency(p, pattern, detector);
            if !detector.number_resolving() {
                // Constant splitting-cascade acceptance for the exact pattern.
                for &(mode, required) in pattern.requirements() {
                    p *= cascade_click_probability(required, detector.cascade_for(mode))?;
                }
            }
            p
        }
        LossModel::Thinning => thinned_pattern_probability(output, pattern, detector)?,
    })
}

/// Execute a scenario. Pure apart from the declared RNG: no files are
/// touched; rendered texts and suggested file names come back in the
/// outcome.
pub fn run_scenario(
    scenario: &Scenario,
    overrides: &RunOverrides,
    format: OutputFormat,
) -> Result<ScenarioOutcome, ScenarioError> {
    scenario.validate()?;
    let resolved = resolve_common(scenario, overrides)?;
    let grid = scenario.sweep_grid();

    let (rows, fit) = match scenario.kind {
        ScenarioKind::Fringe => run_fringe(scenario, overrides, &resolved, &grid)?,
        ScenarioKind::HomDip => run_hom_dip(scenario, &resolved, &grid)?,
        ScenarioKind::VisibilitySweep => run_visibility(scenario, &resolved, &grid)?,
    };

    let summary = Summary {
        schema: SUMMARY_SCHEMA.to_string(),
        scenario: scenario.name.clone(),
        kind: scenario.kind,
        seed: resolved.seed,
        trials_per_point: resolved.trials,
        points: grid.len(),
        fit,
    };
    let sweep_text = match format {
        OutputFormat::Csv => render_sweep_csv(&rows),
        OutputFormat::Json => render_sweep_json(&rows),
    };
    let summary_text = toml::to_string(&summary).expect("summary serializes");
    Ok(ScenarioOutcome {
        sweep_filename: format!("{}_sweep.{}", scenario.name, format.sweep_extension()),
        summary_filename: format!("{}_summary.toml", scenario.name),
        rows,
        summary,
        sweep_text,
        summary_text,
    })
}

fn run_fringe(
    scenario: &Scenario,
    overrides: &RunOverrides,
    resolved: &Resolved,
    grid: &[f64],
) -> Result<(Vec<SweepRow>, SummaryFit), ScenarioError> {
    // Voltage sweeps convert to phase through a model; phase and
    // reflectivity sweeps feed the swept element directly.
    let voltage_model: Option<PhaseVoltageModel> = match scenario.sweep.kind {
        SweepKind::Voltage => Some(match (&scenario.sweep.phase_model, &overrides.phase_model) {
            (Some(inline), _) => inline.to_model(),
            (None, Some(loaded)) => *loaded,
            (None, None) => {
                return Err(invalid(
                    "sweep.model_file",
                    "voltage sweep needs its model file loaded (see --config/model_file)",
                ))
            }
        }),
        _ => None,
    };

    let input = input_state(&scenario.input)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut phases = Vec::with_capacity(grid.len());
    for (index, &setting) in grid.iter().enumerate() {
        let swept_value = match (scenario.sweep.kind, &voltage_model) {
            (SweepKind::Voltage, Some(model)) => model.eval(setting),
            _ => setting,
        };
        phases.push(swept_value);
        let circuit = realize_circuit(&scenario.circuit, Some(swept_value))?;
        let output = evolve(&input, &circuit.compose()?)?;
        let probability = event_probability(
            &output,
            &resolved.pattern,
            &resolved.detector,
            scenario.detection.loss_model,
        )?;
        let counts = sample_counts(
            probability,
            resolved.trials,
            &mut point_rng(resolved.seed, index as u64),
        )?;
        rows.push(SweepRow {
            setting,
            ideal_probability: probability,
            counts,
            poisson_error: (counts as f64).sqrt(),
        });
    }

    let fit = match (scenario.fit.harmonic, scenario.sweep.kind) {
        (Some(harmonic), SweepKind::Phase | SweepKind::Voltage) => {
            let data = FringeData {
                setting_kind: SettingKind::Phase,
                points: rows
                    .iter()
                    .zip(&phases)
                    .map(|(row, &phase)| FringePoint {
                        setting: phase,
                        counts: row.counts,
                        error: row.poisson_error,
                    })
                    .collect(),
            };
            let fringe = fit_fringe(&data, harmonic)?;
            fringe_summary(&fringe, resolved.pattern.total_photons())
        }
        _ => SummaryFit::None,
    };
    Ok((rows, fit))
}

fn fringe_summary(fit: &FringeFit, photon_number: u32) -> SummaryFit {
    let sql = contrast_beats_sql(fit.contrast, photon_number);
    SummaryFit::Fringe {
        harmonic: fit.harmonic,
        amplitude: fit.amplitude,
        contrast: fit.contrast,
        contrast_stderr: fit.contrast_stderr,
        phase_offset: fit.phase_offset,
        chi2_per_dof: fit.chi2_per_dof(),
        iterations: fit.iterations,
        converged: fit.converged,
        beats_sql: sql.beats_sql,
        sql_margin: sql.margin,
    }
}

fn run_hom_dip(
    scenario: &Scenario,
    resolved: &Resolved,
    grid: &[f64],
) -> Result<(Vec<SweepRow>, SummaryFit), ScenarioError> {
    let overlap_spec = scenario
        .sweep
        .overlap
        .ok_or_else(|| invalid("sweep.overlap", "delay sweeps need an overlap model"))?;
    let overlap_model = OverlapModel::new(
        overlap_spec.center_wavelength_nm,
        overlap_spec.bandwidth_nm,
        overlap_spec.shape.to_shape(),
    )?;
    let input = input_fock_state(&scenario.input)?;
    let circuit = realize_circuit(&scenario.circuit, None)?;

    let mut rows = Vec::with_capacity(grid.len());
    for (index, &delay) in grid.iter().enumerate() {
        let x = overlap_model.overlap(delay)?;
        let mut probability =
            distinguishable_mixture_probability(&circuit, &input, &resolved.pattern, x)?;
        probability = apply_efficiency(probability, &resolved.pattern, &resolved.detector);
        let counts = sample_counts(
            probability,
            resolved.trials,
            &mut point_rng(resolved.seed, index as u64),
        )?;
        rows.push(SweepRow {
            setting: delay,
            ideal_probability: probability,
            counts,
            poisson_error: (counts as f64).sqrt(),
        });
    }

    let data = FringeData {
        setting_kind: SettingKind::Delay,
        points: rows
            .iter()
            .map(|row| FringePoint {
                setting: row.setting,
                counts: row.counts,
                error: row.poisson_error,
            })
            .collect(),
    };
    let fit = hom_visibility(&data)?;
    Ok((
        rows,
        SummaryFit::Dip {
            visibility: fit.visibility,
            visibility_stderr: fit.visibility_stderr,
            baseline: fit.baseline,
            dip_center: fit.dip_center,
            dip_width: fit.dip_width,
            dip_resolved: fit.dip_resolved,
            converged: fit.converged,
        },
    ))
}

fn run_visibility(
    scenario: &Scenario,
    resolved: &Resolved,
    grid: &[f64],
) -> Result<(Vec<SweepRow>, SummaryFit), ScenarioError> {
    let input = input_fock_state(&scenario.input)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut peak = (0.0f64, grid[0]);
    let mut min_visibility = f64::INFINITY;
    for (index, &setting) in grid.iter().enumerate() {
        let circuit = realize_circuit(&scenario.circuit, Some(setting))?;
        let floor = distinguishable_mixture_probability(&circuit, &input, &resolved.pattern, 1.0)?;
        let baseline =
            distinguishable_mixture_probability(&circuit, &input, &resolved.pattern, 0.0)?;
        let visibility = if baseline > 0.0 {
            (baseline - floor) / baseline
        } else {
            0.0
        };
        if visibility > peak.0 {
            peak = (visibility, setting);
        }
        min_visibility = min_visibility.min(visibility);
        // The counts column carries sampled dip-floor coincidences.
        let scaled_floor = apply_efficiency(floor, &resolved.pattern, &resolved.detector);
        let counts = sample_counts(
            scaled_floor,
            resolved.trials,
            &mut point_rng(resolved.seed, index as u64),
        )?;
        rows.push(SweepRow {
            setting,
            ideal_probability: visibility,
            counts,
            poisson_error: (counts as f64).sqrt(),
        });
    }
    Ok((
        rows,
        SummaryFit::Visibility {
            min_visibility,
            max_visibility: peak.0,
            peak_setting: peak.1,
        },
    ))
}

/// Calibration outcome: fitted quartic model plus branch-disambiguation
/// flags.
#[derive(Clone, Debug)]
pub struct CalibrationReport {
    pub model: PhaseVoltageModel,
    pub fringe: FringeFit,
    /// True when a 1-photon dataset resolved the modulo-π ambiguity.
    pub disambiguated: bool,
    pub branch_flipped: bool,
    pub ambiguous: bool,
    pub branch_residuals: Option<[f64; 2]>,
}

/// Fit the quartic phase–voltage model to a 2-photon voltage fringe and,
/// when a 1-photon dataset is supplied, resolve the modulo-π branch.
///
/// Without 1-photon data the model is only fixed modulo π; the report says
/// so via `disambiguated = false` and `ambiguous = true`.
pub fn run_calibration(
    two_photon: &FringeData,
    one_photon: Option<&FringeData>,
) -> Result<CalibrationReport, ScenarioError> {
    let fit = fit_phase_voltage(two_photon, 2)?;
    match one_photon {
        Some(one) => {
            let resolution = resolve_phase_branch(&fit.model, one)?;
            Ok(CalibrationReport {
                model: resolution.model,
                fringe: fit.fringe,
                disambiguated: true,
                branch_flipped: resolution.branch_flipped,
                ambiguous: resolution.ambiguous,
                branch_residuals: Some(resolution.residuals),
            })
        }
        None => Ok(CalibrationReport {
            model: fit.model,
            fringe: fit.fringe,
            disambiguated: false,
            branch_flipped: false,
            ambiguous: true,
            branch_residuals: None,
        }),
    }
}

#[derive(Clone, Debug)]
pub struct ContaminationOptions {
    pub max_pairs: u32,
    pub phase_points: usize,
    pub efficiency: f64,
    pub cascade: Vec<f64>,
}

impl Default for ContaminationOptions {
    fn default() -> Self {
        Self {
            max_pairs: 3,
            phase_points: 81,
            efficiency: 0.6,
            cascade: vec![0.5, 0.25, 0.25],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContaminationPoint {
    pub pair_amplitude: f64,
    pub contrast: f64,
}

/// 4-fold fringe contrast versus pair amplitude under the full
/// contamination model: truncated multi-pair input, binomial-thinning loss
/// and non-resolving cascade detection of the (3,1) pattern.
///
/// The contrast is `(max−min)/(max+min)` of the exact probability curve
/// over a phase grid covering two fringe periods. Pair amplitudes must be
/// strictly positive: at λ = 0 the 4-fold rate vanishes identically and no
/// contrast is defined.
pub fn run_contamination_sweep(
    pair_amplitudes: &[f64],
    options: &ContaminationOptions,
) -> Result<(Vec<ContaminationPoint>, String), ScenarioError> {
    if pair_amplitudes.is_empty() {
        return Err(invalid("lambda_grid", "must not be empty"));
    }
    for &lambda in pair_amplitudes {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(
                "lambda_grid",
                format!("pair amplitudes must lie in (0, 1), got {lambda}"),
            ));
        }
    }
    let pattern = DetectionPattern::new([(0, 3), (1, 1)])?;
    let detector = DetectorModel::new(options.efficiency, false)?
        .with_cascade(0, options.cascade.clone())?;

    let mut points = Vec::with_capacity(pair_amplitudes.len());
    for &lambda in pair_amplitudes {
        let input = SpdcSource::new(lambda, options.max_pairs)?.state();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..options.phase_points {
            let phi = -PI / 2.0 + PI * i as f64 / (options.phase_points - 1) as f64;
            let circuit = Circuit::mz_interferometer(phi);
            let output = evolve(&input, &circuit.compose()?)?;
            let p = thinned_pattern_probability(&output, &pattern, &detector)?;
            min = min.min(p);
            max = max.max(p);
        }
        let contrast = if max + min > 0.0 {
            (max - min) / (max + min)
        } else {
            0.0
        };
        points.push(ContaminationPoint {
            pair_amplitude: lambda,
            contrast,
        });
    }
    let csv = render_contamination_csv(&points);
    Ok((points, csv))
}
