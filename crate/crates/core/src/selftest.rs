//! Built-in validation suite behind the `self-test` CLI verb: closed-form
//! law checks, an in-process permanent cross-check, a quick calibration
//! round trip and a byte-level determinism run.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::analysis::{average_fidelity, ideal_hom_visibility, wrap_angle, FringeData, PhaseVoltageModel, SettingKind};
use crate::circuit::{evolve, permanent, Circuit};
use crate::detection::{
    distinguishable_mixture_probability, outcome_probability, sample_counts, DetectionPattern,
};
use crate::fock::{FockState, FockVector};
use crate::scenario::{builtin, point_rng, run_calibration, run_scenario, OutputFormat, RunOverrides};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Run every self-test check; all must pass for a zero exit code.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        permanent_cross_check(),
        noon_generation(),
        fringe_laws(),
        mz_reflectivity_law(),
        hom_visibility_law(),
        fidelity_anchors(),
        calibration_round_trip(),
        determinism(),
    ]
}

/// Permanent of random matrices versus a direct permutation expansion.
fn permanent_cross_check() -> CheckResult {
    fn brute_force(matrix: &Array2<Complex64>) -> Complex64 {
        let n = matrix.nrows();
        let mut columns: Vec<usize> = (0..n).collect();
        let mut total = Complex64::ZERO;
        // Heap's algorithm over column permutations.
        fn visit(
            matrix: &Array2<Complex64>,
            columns: &mut Vec<usize>,
            k: usize,
            total: &mut Complex64,
        ) {
            if k == 1 {
                let mut product = Complex64::new(1.0, 0.0);
                for (row, &col) in columns.iter().enumerate() {
                    product *= matrix[[row, col]];
                }
                *total += product;
                return;
            }
            for i in 0..k {
                visit(matrix, columns, k - 1, total);
                if k.is_multiple_of(2) {
                    columns.swap(i, k - 1);
                } else {
                    columns.swap(0, k - 1);
                }
            }
        }
        visit(matrix, &mut columns, n, &mut total);
        total
    }

    let mut worst = 0.0f64;
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        // xorshift-ish deterministic filler; quality is irrelevant here.
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for n in 1..=5usize {
        let matrix = Array2::from_shape_fn((n, n), |_| Complex64::new(next(), next()));
        let fast = permanent(matrix.view()).expect("square");
        let slow = brute_force(&matrix);
        worst = worst.max((fast - slow).norm());
    }
    check(
        "permanent-cross-check",
        worst < 1e-10,
        format!("max |ryser - permutation sum| = {worst:.2e}"),
    )
}

/// |1,1> through a balanced coupler: coincidences vanish, extremes split evenly.
fn noon_generation() -> CheckResult {
    let mut circuit = Circuit::new(2).expect("two modes");
    circuit.add_coupler(0.5, (0, 1)).expect("valid");
    let out = evolve(
        &FockVector::from_occupations(&[1, 1]).expect("pair"),
        &circuit.compose().expect("unitary"),
    )
    .expect("evolves");
    let coincidence = out
        .amplitude(&FockState::new(vec![1, 1]).expect("state"))
        .norm_sqr();
    let w20 = out
        .amplitude(&FockState::new(vec![2, 0]).expect("state"))
        .norm_sqr();
    let w02 = out
        .amplitude(&FockState::new(vec![0, 2]).expect("state"))
        .norm_sqr();
    let passed = coincidence < 1e-20 && (w20 - 0.5).abs() < 1e-12 && (w02 - 0.5).abs() < 1e-12;
    check(
        "noon-generation",
        passed,
        format!("P(1,1) = {coincidence:.2e}, weights = ({w20:.12}, {w02:.12})"),
    )
}

/// Simulated fringes versus the three closed-form laws on a phase grid.
fn fringe_laws() -> CheckResult {
    let single = DetectionPattern::new([(0, 1), (1, 0)]).expect("pattern");
    let pair = DetectionPattern::new([(0, 1), (1, 1)]).expect("pattern");
    let three_one = DetectionPattern::new([(0, 3), (1, 1)]).expect("pattern");
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let phi = -PI + 2.0 * PI * i as f64 / 200.0;
        let unitary = Circuit::mz_interferometer(phi).compose().expect("unitary");
        let one = evolve(&FockVector::from_occupations(&[1, 0]).expect("in"), &unitary)
            .expect("evolves");
        let two = evolve(&FockVector::from_occupations(&[1, 1]).expect("in"), &unitary)
            .expect("evolves");
        let four = evolve(&FockVector::from_occupations(&[2, 2]).expect("in"), &unitary)
            .expect("evolves");
        let p1 = outcome_probability(&one, &single).expect("prob");
        let p2 = outcome_probability(&two, &pair).expect("prob");
        let p4 = outcome_probability(&four, &three_one).expect("prob");
        worst = worst.max((p1 - 0.5 * (1.0 - phi.cos())).abs());
        worst = worst.max((p2 - 0.5 * (1.0 + (2.0 * phi).cos())).abs());
        worst = worst.max((p4 - 3.0 / 16.0 * (1.0 - (4.0 * phi).cos())).abs());
    }
    check(
        "fringe-laws",
        worst < 1e-10,
        format!("max |simulated - closed form| = {worst:.2e}"),
    )
}

fn mz_reflectivity_law() -> CheckResult {
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let phi = -PI + 2.0 * PI * i as f64 / 100.0;
        let eta = Circuit::mz_interferometer(phi)
            .compose()
            .expect("unitary")
            .effective_reflectivity();
        worst = worst.max((eta - (phi / 2.0).sin().powi(2)).abs());
    }
    check(
        "mz-reflectivity",
        worst < 1e-12,
        format!("max |eta - sin^2(phi/2)| = {worst:.2e}"),
    )
}

fn hom_visibility_law() -> CheckResult {
    let pattern = DetectionPattern::new([(0, 1), (1, 1)]).expect("pattern");
    let input = FockState::new(vec![1, 1]).expect("pair");
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let eta = 0.005 + 0.99 * i as f64 / 100.0;
        let mut circuit = Circuit::new(2).expect("two modes");
        circuit.add_coupler(eta, (0, 1)).expect("valid");
        let floor =
            distinguishable_mixture_probability(&circuit, &input, &pattern, 1.0).expect("prob");
        let baseline =
            distinguishable_mixture_probability(&circuit, &input, &pattern, 0.0).expect("prob");
        let visibility = (baseline - floor) / baseline;
        worst = worst.max((visibility - ideal_hom_visibility(eta)).abs());
    }
    check(
        "hom-visibility-law",
        worst < 1e-9,
        format!("max deviation from ideal-visibility law = {worst:.2e}"),
    )
}

fn fidelity_anchors() -> CheckResult {
    let at_unit = average_fidelity(1.0);
    let at_published = average_fidelity(0.982);
    let passed = at_unit == 1.0 && (at_published - 0.99984).abs() < 5e-5;
    check(
        "average-fidelity",
        passed,
        format!("F(1) = {at_unit}, F(0.982) = {at_published:.6}"),
    )
}

/// One seeded calibration round trip through the full pipeline.
fn calibration_round_trip() -> CheckResult {
    let truth = PhaseVoltageModel::new(-1.887, 0.157, 0.0045, -0.001);
    let seed = 7u64;
    let synth = |harmonic: f64, flip: bool, stream: u64| -> FringeData {
        let series: Vec<(f64, u64)> = (0..50)
            .map(|i| {
                let v = 5.0 * i as f64 / 49.0;
                let c = (harmonic * truth.eval(v)).cos();
                let c = if flip { -c } else { c };
                let mean = 1000.0 * (1.0 + c);
                let counts = sample_counts(
                    mean / 2000.0,
                    2000,
                    &mut point_rng(seed, stream * 1000 + i as u64),
                )
                .expect("sampled");
                (v, counts)
            })
            .collect();
        FringeData::poissonian(SettingKind::Voltage, &series)
    };
    let two_photon = synth(2.0, false, 0);
    let one_photon = synth(1.0, true, 1);
    let report = match run_calibration(&two_photon, Some(&one_photon)) {
        Ok(r) => r,
        Err(e) => return check("calibration-round-trip", false, format!("failed: {e}")),
    };
    let mut sum_sq = 0.0;
    for i in 0..=100 {
        let v = 5.0 * i as f64 / 100.0;
        let d = wrap_angle(report.model.eval(v) - truth.eval(v));
        sum_sq += d * d;
    }
    let rms = (sum_sq / 101.0).sqrt();
    check(
        "calibration-round-trip",
        rms < 0.05 && report.fringe.converged,
        format!("phi(V) recovery rms = {rms:.4} rad"),
    )
}

/// Two runs of a built-in scenario with one seed must render identical bytes.
fn determinism() -> CheckResult {
    let scenario = builtin("fig4b").expect("builtin");
    let overrides = RunOverrides::default();
    let first = run_scenario(&scenario, &overrides, OutputFormat::Csv);
    let second = run_scenario(&scenario, &overrides, OutputFormat::Csv);
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let same = a.sweep_text == b.sweep_text && a.summary_text == b.summary_text;
            check(
                "determinism",
                same,
                if same {
                    format!("{} bytes identical across runs", a.sweep_text.len())
                } else {
                    "outputs differ between identical runs".to_string()
                },
            )
        }
        (Err(e), _) | (_, Err(e)) => check("determinism", false, format!("run failed: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for result in run_all() {
            assert!(result.passed, "{}: {}", result.name, result.detail);
        }
    }
}
