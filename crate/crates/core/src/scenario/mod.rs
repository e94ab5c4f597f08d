//! Declarative experiment scenarios: each one binds an input state, a
//! circuit, a sweep axis, a detection model and a fit into a runnable unit
//! that emits plot-ready data and a machine-checkable summary.
//!
//! Scenarios are single TOML documents (schema `photonsim.scenario.v1`).
//! The built-in scenarios reproduce the standard experiments end to end and
//! can be exported, diffed and modified. Sweep outputs are CSV (or JSON)
//! with a fixed column schema; fit summaries and calibration models are
//! TOML. Every file starts with (or contains) a schema-version marker.

mod builtin;
mod report;
mod run;

pub use builtin::{builtin, builtin_names, builtin_toml};
pub use report::{
    load_phase_model, phase_model_toml, read_sweep_csv, sweep_rows_to_fringe_data,
    PhaseModelFile, CONTAMINATION_SCHEMA, PHASE_MODEL_SCHEMA, SUMMARY_SCHEMA, SWEEP_SCHEMA,
};
pub use run::{
    point_rng, run_calibration, run_contamination_sweep, run_scenario, CalibrationReport,
    ContaminationOptions, ContaminationPoint, OutputFormat, RunOverrides, ScenarioOutcome,
    Summary, SummaryFit, SweepRow,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::circuit::CircuitError;
use crate::detection::DetectionError;
use crate::fock::FockError;
use crate::source::SourceError;

/// Schema tag expected in every scenario file.
pub const SCENARIO_SCHEMA: &str = "photonsim.scenario.v1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
    #[error("failed to parse scenario: {0}")]
    Parse(String),
    #[error("failed to parse {what}: {message}")]
    BadFile { what: String, message: String },
    #[error("fit failed: {0}")]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A complete, serializable experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub trials_per_point: u64,
    pub input: InputSpec,
    pub circuit: CircuitSpec,
    pub sweep: SweepSpec,
    pub detection: DetectionSpec,
    #[serde(default)]
    pub fit: FitSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Sweep a phase (or voltage) and record pattern-event counts.
    Fringe,
    /// Sweep the relative optical delay through a fixed circuit and record
    /// the interference dip.
    HomDip,
    /// Sweep a phase or reflectivity and record the ideal dip visibility
    /// with dip-floor counts.
    VisibilitySweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// A definite occupation-number input.
    Fock { occupations: Vec<u32> },
    /// The truncated multi-pair source state.
    Spdc { pair_amplitude: f64, max_pairs: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub mode_count: usize,
    pub elements: Vec<ElementSpec>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    Coupler {
        modes: [usize; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reflectivity: Option<f64>,
        #[serde(default, skip_serializing_if = "is_false")]
        swept: bool,
    },
    Phase {
        mode: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<f64>,
        #[serde(default, skip_serializing_if = "is_false")]
        swept: bool,
    },
}

impl ElementSpec {
    fn swept(&self) -> bool {
        match self {
            Self::Coupler { swept, .. } | Self::Phase { swept, .. } => *swept,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Phase,
    Voltage,
    Delay,
    Reflectivity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Inline phase–voltage coefficients, used to synthesize voltage sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_model: Option<PhaseModelSpec>,
    /// Path to a calibration model file written by `calibrate`; mutually
    /// exclusive with `phase_model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
    /// Spectral-filter overlap model, required for delay sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseModelSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl PhaseModelSpec {
    pub fn to_model(self) -> crate::analysis::PhaseVoltageModel {
        crate::analysis::PhaseVoltageModel::new(self.alpha, self.beta, self.gamma, self.delta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub center_wavelength_nm: f64,
    pub bandwidth_nm: f64,
    pub shape: FilterShapeSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShapeSpec {
    Gaussian,
    Sinc2,
}

impl FilterShapeSpec {
    pub fn to_shape(self) -> crate::detection::FilterShape {
        match self {
            Self::Gaussian => crate::detection::FilterShape::Gaussian,
            Self::Sinc2 => crate::detection::FilterShape::Sinc2,
        }
    }
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_resolving() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSpec {
    pub pattern: Vec<PatternEntry>,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_resolving")]
    pub number_resolving: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cascade: Vec<CascadeSpec>,
    #[serde(default)]
    pub loss_model: LossModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternEntry {
    pub mode: usize,
    pub photons: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSpec {
    pub mode: usize,
    pub branches: Vec<f64>,
}

/// How detector loss enters the event probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    /// Pure scale factor on count rates (ideal heralded inputs).
    #[default]
    Scale,
    /// Binomial thinning of output occupations before pattern matching
    /// (multi-pair contamination).
    Thinning,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<u32>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if scenario.schema != SCENARIO_SCHEMA {
            return Err(invalid(
                "schema",
                format!(
                    "unsupported schema `{}` (expected `{SCENARIO_SCHEMA}`)",
                    scenario.schema
                ),
            ));
        }
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Structural validation with field-level messages. IO-dependent checks
    /// (model files) happen at run time.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.trials_per_point == 0 {
            return Err(invalid("trials_per_point", "must be at least 1"));
        }

        // Input.
        match &self.input {
            InputSpec::Fock { occupations } => {
                if occupations.len() != self.circuit.mode_count {
                    return Err(invalid(
                        "input.occupations",
                        format!(
                            "has {} modes but the circuit has {}",
                            occupations.len(),
                            self.circuit.mode_count
                        ),
                    ));
                }
            }
            InputSpec::Spdc {
                pair_amplitude,
                max_pairs,
            } => {
                if !(0.0..1.0).contains(pair_amplitude) {
                    return Err(invalid(
                        "input.pair_amplitude",
                        format!("must lie in [0, 1), got {pair_amplitude}"),
                    ));
                }
                if *max_pairs == 0 {
                    return Err(invalid("input.max_pairs", "must be at least 1"));
                }
                if self.circuit.mode_count != 2 {
                    return Err(invalid(
                        "circuit.mode_count",
                        "pair-source inputs require a 2-mode circuit",
                    ));
                }
                if self.kind != ScenarioKind::Fringe {
                    return Err(invalid(
                        "input.kind",
                        "pair-source inputs are only supported by fringe scenarios",
                    ));
                }
            }
        }

        // Circuit elements.
        for (i, element) in self.circuit.elements.iter().enumerate() {
            let field = format!("circuit.elements[{i}]");
            match element {
                ElementSpec::Coupler {
                    modes,
                    reflectivity,
                    swept,
                } => {
                    for &mode in modes {
                        if mode >= self.circuit.mode_count {
                            return Err(invalid(
                                &field,
                                format!(
                                    "mode {mode} out of range for {} modes",
                                    self.circuit.mode_count
                                ),
                            ));
                        }
                    }
                    if modes[0] == modes[1] {
                        return Err(invalid(&field, "coupler modes must be distinct"));
                    }
                    match (reflectivity, swept) {
                        (None, false) => {
                            return Err(invalid(
                                &field,
                                "needs a reflectivity unless it is the swept element",
                            ))
                        }
                        (Some(r), _) if !(0.0..=1.0).contains(r) => {
                            return Err(invalid(
                                &field,
                                format!("reflectivity must lie in [0, 1], got {r}"),
                            ))
                        }
                        _ => {}
                    }
                }
                ElementSpec::Phase { mode, phase, swept } => {
                    if *mode >= self.circuit.mode_count {
                        return Err(invalid(
                            &field,
                            format!(
                                "mode {mode} out of range for {} modes",
                                self.circuit.mode_count
                            ),
                        ));
                    }
                    match (phase, swept) {
                        (None, false) => {
                            return Err(invalid(
                                &field,
                                "needs a phase unless it is the swept element",
                            ))
                        }
                        (Some(p), _) if !p.is_finite() => {
                            return Err(invalid(&field, "phase must be finite"))
                        }
                        _ => {}
                    }
                }
            }
        }

        // Sweep axis.
        if self.sweep.points == 0 {
            return Err(invalid("sweep.points", "grid must not be empty"));
        }
        if !self.sweep.start.is_finite() || !self.sweep.stop.is_finite() {
            return Err(invalid("sweep", "start and stop must be finite"));
        }
        let swept_count = self.circuit.elements.iter().filter(|e| e.swept()).count();
        let needs_swept_element = matches!(
            self.sweep.kind,
            SweepKind::Phase | SweepKind::Voltage | SweepKind::Reflectivity
        );
        if needs_swept_element && swept_count != 1 {
            return Err(invalid(
                "circuit.elements",
                format!(
                    "{:?} sweeps need exactly one swept element, found {swept_count}",
                    self.sweep.kind
                ),
            ));
        }
        if self.sweep.kind == SweepKind::Delay && swept_count != 0 {
            return Err(invalid(
                "circuit.elements",
                "delay sweeps vary the photon arrival time, not a circuit element",
            ));
        }
        if let Some(element) = self.circuit.elements.iter().find(|e| e.swept()) {
            let wants_coupler = self.sweep.kind == SweepKind::Reflectivity;
            let is_coupler = matches!(element, ElementSpec::Coupler { .. });
            if wants_coupler != is_coupler {
                return Err(invalid(
                    "circuit.elements",
                    format!(
                        "the swept element must be a {} for {:?} sweeps",
                        if wants_coupler { "coupler" } else { "phase shifter" },
                        self.sweep.kind
                    ),
                ));
            }
        }
        match self.sweep.kind {
            SweepKind::Voltage => {
                if self.sweep.phase_model.is_some() && self.sweep.model_file.is_some() {
                    return Err(invalid(
                        "sweep",
                        "phase_model and model_file are mutually exclusive",
                    ));
                }
                if self.sweep.phase_model.is_none() && self.sweep.model_file.is_none() {
                    return Err(invalid(
                        "sweep",
                        "voltage sweeps need phase_model coefficients or a model_file",
                    ));
                }
            }
            SweepKind::Reflectivity => {
                let (lo, hi) = (
                    self.sweep.start.min(self.sweep.stop),
                    self.sweep.start.max(self.sweep.stop),
                );
                if lo < 0.0 || hi > 1.0 {
                    return Err(invalid(
                        "sweep",
                        "reflectivity grids must stay within [0, 1]",
                    ));
                }
            }
            _ => {}
        }
        if self.sweep.kind == SweepKind::Delay && self.sweep.overlap.is_none() {
            return Err(invalid("sweep.overlap", "delay sweeps need an overlap model"));
        }
        if self.sweep.kind != SweepKind::Delay && self.sweep.overlap.is_some() {
            return Err(invalid(
                "sweep.overlap",
                "only delay sweeps use an overlap model",
            ));
        }
        if self.sweep.kind != SweepKind::Voltage
            && (self.sweep.phase_model.is_some() || self.sweep.model_file.is_some())
        {
            return Err(invalid(
                "sweep",
                "phase_model/model_file only apply to voltage sweeps",
            ));
        }

        // Detection.
        if self.detection.pattern.is_empty() {
            return Err(invalid("detection.pattern", "must not be empty"));
        }
        for entry in &self.detection.pattern {
            if entry.mode >= self.circuit.mode_count {
                return Err(invalid(
                    "detection.pattern",
                    format!(
                        "mode {} out of range for {} modes",
                        entry.mode, self.circuit.mode_count
                    ),
                ));
            }
        }
        {
            let mut modes: Vec<usize> = self.detection.pattern.iter().map(|p| p.mode).collect();
            modes.sort_unstable();
            modes.dedup();
            if modes.len() != self.detection.pattern.len() {
                return Err(invalid(
                    "detection.pattern",
                    "monitored modes must be distinct",
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.detection.efficiency) {
            return Err(invalid(
                "detection.efficiency",
                format!("must lie in [0, 1], got {}", self.detection.efficiency),
            ));
        }
        for (i, cascade) in self.detection.cascade.iter().enumerate() {
            let field = format!("detection.cascade[{i}]");
            if cascade.mode >= self.circuit.mode_count {
                return Err(invalid(&field, "mode out of range"));
            }
            if cascade.branches.is_empty() {
                return Err(invalid(&field, "needs at least one branch"));
            }
            let sum: f64 = cascade.branches.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(invalid(
                    &field,
                    format!("branch probabilities sum to {sum}, expected 1"),
                ));
            }
        }
        if !self.detection.number_resolving && self.detection.loss_model == LossModel::Thinning {
            for entry in &self.detection.pattern {
                let branches = self
                    .detection
                    .cascade
                    .iter()
                    .find(|c| c.mode == entry.mode)
                    .map(|c| c.branches.len())
                    .unwrap_or(1);
                if entry.photons as usize != branches {
                    return Err(invalid(
                        "detection.cascade",
                        format!(
                            "mode {} requires {} photons but its cascade has {} branch(es)",
                            entry.mode, entry.photons, branches
                        ),
                    ));
                }
            }
        }

        // Fit.
        match self.kind {
            ScenarioKind::Fringe => {
                if let Some(harmonic) = self.fit.harmonic {
                    if !matches!(harmonic, 1 | 2 | 4) {
                        return Err(invalid(
                            "fit.harmonic",
                            format!("must be 1, 2 or 4, got {harmonic}"),
                        ));
                    }
                    if self.sweep.kind == SweepKind::Reflectivity {
                        return Err(invalid(
                            "fit.harmonic",
                            "reflectivity sweeps have no phase axis to fit",
                        ));
                    }
                }
            }
            ScenarioKind::HomDip | ScenarioKind::VisibilitySweep => {
                if self.fit.harmonic.is_some() {
                    return Err(invalid(
                        "fit.harmonic",
                        "only fringe scenarios fit a harmonic",
                    ));
                }
                if self.sweep.kind == SweepKind::Voltage {
                    return Err(invalid(
                        "sweep.kind",
                        "voltage sweeps only apply to fringe scenarios",
                    ));
                }
            }
        }
        match self.kind {
            ScenarioKind::HomDip => {
                if self.sweep.kind != SweepKind::Delay {
                    return Err(invalid("sweep.kind", "hom_dip scenarios sweep the delay"));
                }
                self.require_pair_input("hom_dip")?;
            }
            ScenarioKind::VisibilitySweep => {
                if !matches!(self.sweep.kind, SweepKind::Phase | SweepKind::Reflectivity) {
                    return Err(invalid(
                        "sweep.kind",
                        "visibility sweeps vary a phase or a reflectivity",
                    ));
                }
                self.require_pair_input("visibility_sweep")?;
            }
            ScenarioKind::Fringe => {
                if self.sweep.kind == SweepKind::Delay {
                    return Err(invalid(
                        "sweep.kind",
                        "delay sweeps belong to hom_dip scenarios",
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_pair_input(&self, kind: &str) -> Result<(), ScenarioError> {
        match &self.input {
            InputSpec::Fock { occupations }
                if occupations.iter().sum::<u32>() == 2
                    && occupations.iter().all(|&n| n <= 1) =>
            {
                Ok(())
            }
            _ => Err(invalid(
                "input",
                format!("{kind} scenarios need exactly one photon in each of two input modes"),
            )),
        }
    }

    /// Evenly spaced sweep settings from start to stop inclusive.
    pub fn sweep_grid(&self) -> Vec<f64> {
        let n = self.sweep.points;
        if n == 1 {
            return vec![self.sweep.start];
        }
        (0..n)
            .map(|i| {
                self.sweep.start
                    + (self.sweep.stop - self.sweep.start) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}
