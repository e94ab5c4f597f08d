//! End-to-end workflow tests: golden serialized states, the calibrate →
//! voltage-sweep pipeline, and the on-disk format round trips.

mod common;

use photonsim::analysis::{wrap_angle, SettingKind};
use photonsim::circuit::{evolve, Circuit};
use photonsim::fock::FockVector;
use photonsim::scenario::{
    builtin, load_phase_model, phase_model_toml, read_sweep_csv, run_calibration, run_scenario,
    sweep_rows_to_fringe_data, OutputFormat, RunOverrides, Scenario, SummaryFit, SweepKind,
};

#[test]
fn golden_two_pair_coupler_state() {
    let golden = include_str!("golden/two_pair_coupler_output.json");
    let mut circuit = Circuit::new(2).unwrap();
    circuit.add_coupler(0.5, (0, 1)).unwrap();
    let out = evolve(
        &FockVector::from_occupations(&[2, 2]).unwrap(),
        &circuit.compose().unwrap(),
    )
    .unwrap();
    assert_eq!(out.to_json(), golden, "serialized state drifted from golden file");

    let parsed = FockVector::from_json(golden).unwrap();
    assert_eq!(parsed, out);
    // Weight sanity straight from the file.
    assert!((parsed.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn calibrate_then_run_voltage_sweep() {
    // Generate both calibration datasets from built-ins.
    let overrides = RunOverrides::default();
    let two = run_scenario(&builtin("fig3_2photon").unwrap(), &overrides, OutputFormat::Csv)
        .unwrap();
    let one = run_scenario(&builtin("fig3_1photon").unwrap(), &overrides, OutputFormat::Csv)
        .unwrap();

    // Round-trip through the CSV layer, as the CLI does.
    let two_rows = read_sweep_csv(&two.sweep_text).unwrap();
    let one_rows = read_sweep_csv(&one.sweep_text).unwrap();
    assert_eq!(two_rows, two.rows);
    let two_data = sweep_rows_to_fringe_data(&two_rows, SettingKind::Voltage);
    let one_data = sweep_rows_to_fringe_data(&one_rows, SettingKind::Voltage);

    let report = run_calibration(&two_data, Some(&one_data)).unwrap();
    assert!(report.fringe.converged);
    assert!(report.disambiguated);
    assert!(!report.ambiguous);

    // The recovered model matches the generating coefficients.
    let truth = builtin("fig3_2photon")
        .unwrap()
        .sweep
        .phase_model
        .unwrap()
        .to_model();
    for i in 0..=20 {
        let v = 5.0 * i as f64 / 20.0;
        let d = wrap_angle(report.model.eval(v) - truth.eval(v));
        assert!(d.abs() < 0.05, "phi(V) off by {d:.4} rad at {v} V");
    }

    // Write the model file, load it back, and drive a voltage sweep with it.
    let dir = std::env::temp_dir().join(format!("photonsim_workflow_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let model_path = dir.join("phase_model.toml");
    std::fs::write(&model_path, phase_model_toml(&report)).unwrap();
    let loaded = load_phase_model(&model_path).unwrap();
    assert!((loaded.alpha - report.model.alpha).abs() < 1e-12);
    assert!(loaded.uncertainties.is_some());

    let mut scenario = builtin("fig4b").unwrap();
    scenario.name = "fig4b_voltage".into();
    scenario.sweep.kind = SweepKind::Voltage;
    scenario.sweep.start = 0.0;
    scenario.sweep.stop = 5.0;
    scenario.sweep.points = 80;
    scenario.sweep.model_file = Some(model_path.display().to_string());
    scenario.validate().unwrap();

    let outcome = run_scenario(
        &scenario,
        &RunOverrides {
            phase_model: Some(loaded),
            ..RunOverrides::default()
        },
        OutputFormat::Csv,
    )
    .unwrap();
    match outcome.summary.fit {
        SummaryFit::Fringe {
            contrast,
            converged,
            beats_sql,
            ..
        } => {
            assert!(converged);
            assert!(beats_sql);
            assert!((contrast - 1.0).abs() < 0.02, "contrast {contrast}");
        }
        ref other => panic!("expected a fringe fit, got {other:?}"),
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn calibration_without_one_photon_data_flags_pi_ambiguity() {
    let two = run_scenario(
        &builtin("fig3_2photon").unwrap(),
        &RunOverrides::default(),
        OutputFormat::Csv,
    )
    .unwrap();
    let two_data = sweep_rows_to_fringe_data(&two.rows, SettingKind::Voltage);
    let report = run_calibration(&two_data, None).unwrap();
    assert!(!report.disambiguated);
    assert!(report.ambiguous);
    assert!(report.branch_residuals.is_none());
    let model_text = phase_model_toml(&report);
    assert!(model_text.contains("modulo = \"pi\""), "{model_text}");
}

#[test]
fn noiseless_calibration_recovers_exact_coefficients() {
    let truth = builtin("fig3_2photon")
        .unwrap()
        .sweep
        .phase_model
        .unwrap()
        .to_model();
    let make = |harmonic: f64, flip: bool| {
        let series: Vec<(f64, u64)> = (0..50)
            .map(|i| {
                let v = 5.0 * i as f64 / 49.0;
                let c = (harmonic * truth.eval(v)).cos();
                let c = if flip { -c } else { c };
                (v, (5.0e7 * (1.0 + c)).round() as u64)
            })
            .collect();
        sweep_rows_to_fringe_data(
            &series
                .iter()
                .map(|&(setting, counts)| photonsim::scenario::SweepRow {
                    setting,
                    ideal_probability: 0.0,
                    counts,
                    poisson_error: (counts as f64).sqrt(),
                })
                .collect::<Vec<_>>(),
            SettingKind::Voltage,
        )
    };
    let report = run_calibration(&make(2.0, false), Some(&make(1.0, true))).unwrap();
    assert!(report.fringe.converged);
    assert!(!report.ambiguous);
    assert!((report.model.alpha - truth.alpha).abs() < 1e-3);
    assert!((report.model.beta - truth.beta).abs() < 1e-3);
    assert!((report.model.gamma - truth.gamma).abs() < 1e-3);
    assert!((report.model.delta - truth.delta).abs() < 1e-4);
}

#[test]
fn builtin_ideal_columns_follow_the_closed_form_laws() {
    let laws: [(&str, fn(f64) -> f64); 4] = [
        ("fig4a", |phi| 0.5 * (1.0 - phi.cos())),
        ("fig4b", |phi| 0.5 * (1.0 + (2.0 * phi).cos())),
        ("fig4c", |phi| 3.0 / 16.0 * (1.0 - (4.0 * phi).cos())),
        ("fig5", |phi| {
            let eta = (phi / 2.0).sin().powi(2);
            2.0 * eta * (1.0 - eta) / (1.0 - 2.0 * eta + 2.0 * eta * eta)
        }),
    ];
    for (name, law) in laws {
        let outcome = run_scenario(
            &builtin(name).unwrap(),
            &RunOverrides::default(),
            OutputFormat::Csv,
        )
        .unwrap();
        for row in &outcome.rows {
            let expected = law(row.setting);
            assert!(
                (row.ideal_probability - expected).abs() < 1e-10,
                "{name} at {}: {} vs {}",
                row.setting,
                row.ideal_probability,
                expected
            );
        }
    }
}

#[test]
fn voltage_sweep_without_model_is_rejected() {
    let mut scenario = builtin("fig4b").unwrap();
    scenario.sweep.kind = SweepKind::Voltage;
    scenario.sweep.start = 0.0;
    scenario.sweep.stop = 5.0;
    let err = scenario.validate().unwrap_err();
    assert!(err.to_string().contains("voltage sweeps need"), "{err}");
}

#[test]
fn json_sweep_format_carries_schema() {
    let outcome = run_scenario(
        &builtin("fig4a").unwrap(),
        &RunOverrides::default(),
        OutputFormat::Json,
    )
    .unwrap();
    assert!(outcome.sweep_filename.ends_with(".json"));
    let value: serde_json::Value = serde_json::from_str(&outcome.sweep_text).unwrap();
    assert_eq!(value["schema"], "photonsim.sweep.v1");
    assert_eq!(
        value["points"].as_array().unwrap().len(),
        outcome.rows.len()
    );
}

#[test]
fn seed_and_trials_overrides_take_effect() {
    let scenario = builtin("fig4a").unwrap();
    let base = run_scenario(&scenario, &RunOverrides::default(), OutputFormat::Csv).unwrap();
    let reseeded = run_scenario(
        &scenario,
        &RunOverrides {
            seed: Some(scenario.seed + 1),
            ..RunOverrides::default()
        },
        OutputFormat::Csv,
    )
    .unwrap();
    assert_ne!(base.sweep_text, reseeded.sweep_text);
    assert_eq!(reseeded.summary.seed, scenario.seed + 1);

    let heavier = run_scenario(
        &scenario,
        &RunOverrides {
            trials: Some(scenario.trials_per_point * 10),
            ..RunOverrides::default()
        },
        OutputFormat::Csv,
    )
    .unwrap();
    let base_total: u64 = base.rows.iter().map(|r| r.counts).sum();
    let heavy_total: u64 = heavier.rows.iter().map(|r| r.counts).sum();
    assert!(heavy_total > 5 * base_total);
}

#[test]
fn exported_builtin_text_parses_to_the_same_scenario() {
    for name in photonsim::scenario::builtin_names() {
        let text = photonsim::scenario::builtin_toml(name).unwrap();
        let parsed = Scenario::parse(text).unwrap();
        let reserialized = Scenario::parse(&parsed.to_toml()).unwrap();
        assert_eq!(parsed, reserialized, "{name}");
    }
}

#[test]
fn sweep_csv_rejects_foreign_files() {
    assert!(read_sweep_csv("# other.schema\nsetting\n").is_err());
    assert!(read_sweep_csv("").is_err());
    let outcome = run_scenario(
        &builtin("fig4a").unwrap(),
        &RunOverrides::default(),
        OutputFormat::Csv,
    )
    .unwrap();
    let mut mangled = outcome.sweep_text.replace("poisson_error", "sigma");
    assert!(read_sweep_csv(&mangled).is_err());
    mangled = outcome.sweep_text.replace(',', ";");
    assert!(read_sweep_csv(&mangled).is_err());
}
