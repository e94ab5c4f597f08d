//! Fixed on-disk formats: the sweep CSV/JSON schema, fit summaries,
//! calibration model files and the contamination table. Every format starts
//! with (or embeds) a schema-version marker, and all rendering is
//! deterministic so identical runs produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{ContaminationPoint, SweepRow};
use super::{CalibrationReport, ScenarioError};
use crate::analysis::{FringeData, FringePoint, PhaseVoltageModel, SettingKind};

pub const SWEEP_SCHEMA: &str = "photonsim.sweep.v1";
pub const SUMMARY_SCHEMA: &str = "photonsim.summary.v1";
pub const PHASE_MODEL_SCHEMA: &str = "photonsim.phase-model.v1";
pub const CONTAMINATION_SCHEMA: &str = "photonsim.contamination.v1";

/// Column order of the sweep CSV, fixed by schema.
pub const SWEEP_COLUMNS: &str = "setting,ideal_probability,counts,poisson_error";

pub(super) fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 64);
    out.push_str(&format!("# {SWEEP_SCHEMA}\n{SWEEP_COLUMNS}\n"));
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.setting, row.ideal_probability, row.counts, row.poisson_error
        ));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SweepJson {
    schema: String,
    points: Vec<SweepRow>,
}

pub(super) fn render_sweep_json(rows: &[SweepRow]) -> String {
    let doc = SweepJson {
        schema: SWEEP_SCHEMA.to_string(),
        points: rows.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("sweep serializes");
    text.push('\n');
    text
}

/// Parse a sweep CSV previously written by this crate.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>, ScenarioError> {
    let bad = |message: String| ScenarioError::BadFile {
        what: "sweep csv".to_string(),
        message,
    };
    let mut lines = text.lines();
    let schema_line = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let schema = schema_line.trim_start_matches('#').trim();
    if schema != SWEEP_SCHEMA {
        return Err(bad(format!("unsupported schema line `{schema_line}`")));
    }
    let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
    if header != SWEEP_COLUMNS {
        return Err(bad(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", i + 3)));
        }
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| bad(format!("line {}: {e}", i + 3)))
        };
        rows.push(SweepRow {
            setting: parse_f(fields[0])?,
            ideal_probability: parse_f(fields[1])?,
            counts: fields[2]
                .parse::<u64>()
                .map_err(|e| bad(format!("line {}: {e}", i + 3)))?,
            poisson_error: parse_f(fields[3])?,
        });
    }
    Ok(rows)
}

/// View sweep rows as a fringe dataset for the analysis module.
pub fn sweep_rows_to_fringe_data(rows: &[SweepRow], setting_kind: SettingKind) -> FringeData {
    FringeData {
        setting_kind,
        points: rows
            .iter()
            .map(|row| FringePoint {
                setting: row.setting,
                counts: row.counts,
                error: row.poisson_error,
            })
            .collect(),
    }
}

/// Serialized calibration model (`photonsim.phase-model.v1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseModelFile {
    pub schema: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainties: Option<ModelUncertainties>,
    /// `"pi"` when only 2-photon data constrained the fit, `"two_pi"` after
    /// 1-photon disambiguation.
    pub modulo: String,
    pub ambiguous: bool,
    pub branch_flipped: bool,
    pub contrast: f64,
    pub chi2_per_dof: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelUncertainties {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub(super) fn phase_model_file(report: &CalibrationReport) -> PhaseModelFile {
    PhaseModelFile {
        schema: PHASE_MODEL_SCHEMA.to_string(),
        alpha: report.model.alpha,
        beta: report.model.beta,
        gamma: report.model.gamma,
        delta: report.model.delta,
        uncertainties: report.model.uncertainties.map(|u| ModelUncertainties {
            alpha: u[0],
            beta: u[1],
            gamma: u[2],
            delta: u[3],
        }),
        modulo: if report.disambiguated { "two_pi" } else { "pi" }.to_string(),
        ambiguous: report.ambiguous,
        branch_flipped: report.branch_flipped,
        contrast: report.fringe.contrast,
        chi2_per_dof: report.fringe.chi2_per_dof(),
        iterations: report.fringe.iterations,
        converged: report.fringe.converged,
    }
}

/// Render a calibration report as a model file.
pub fn phase_model_toml(report: &CalibrationReport) -> String {
    toml::to_string(&phase_model_file(report)).expect("model serializes")
}

/// Load the φ(V) coefficients from a model file written by `calibrate`.
pub fn load_phase_model(path: &Path) -> Result<PhaseVoltageModel, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let file: PhaseModelFile = toml::from_str(&text).map_err(|e| ScenarioError::BadFile {
        what: path.display().to_string(),
        message: e.to_string(),
    })?;
    if file.schema != PHASE_MODEL_SCHEMA {
        return Err(ScenarioError::BadFile {
            what: path.display().to_string(),
            message: format!("unsupported schema `{}`", file.schema),
        });
    }
    let mut model = PhaseVoltageModel::new(file.alpha, file.beta, file.gamma, file.delta);
    model.uncertainties = file
        .uncertainties
        .map(|u| [u.alpha, u.beta, u.gamma, u.delta]);
    Ok(model)
}

pub(super) fn render_contamination_csv(points: &[ContaminationPoint]) -> String {
    let mut out = String::with_capacity(points.len() * 24 + 64);
    out.push_str(&format!("# {CONTAMINATION_SCHEMA}\npair_amplitude,contrast\n"));
    for point in points {
        out.push_str(&format!("{},{}\n", point.pair_amplitude, point.contrast));
    }
    out
}
