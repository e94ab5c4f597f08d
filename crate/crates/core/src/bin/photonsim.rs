//! Command-line front end: run scenarios, calibrate the phase shifter,
//! export built-in configs, sweep pump-power contamination, self-test.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use photonsim::scenario::{
    builtin, builtin_names, builtin_toml, load_phase_model, phase_model_toml, read_sweep_csv,
    run_calibration, run_contamination_sweep, run_scenario, sweep_rows_to_fringe_data,
    ContaminationOptions, OutputFormat, RunOverrides, Scenario, ScenarioError, SweepKind,
};

#[derive(Parser)]
#[command(
    name = "photonsim",
    about = "Simulate and analyze multi-photon interference in a thermally tuned waveguide interferometer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario by name, or a scenario file via --config.
    Run(RunArgs),
    /// Fit the quartic phase-voltage model from sweep CSVs and write the
    /// model file consumed by voltage sweeps.
    Calibrate(CalibrateArgs),
    /// Write the TOML of a built-in scenario so it can be diffed or edited.
    ExportScenario(ExportArgs),
    /// Tabulate 4-fold fringe contrast versus the source pair amplitude
    /// under thinning loss and non-resolving cascade detection.
    SweepContamination(ContaminationArgs),
    /// Run the built-in validation suite; exits non-zero on any failure.
    SelfTest,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario name (see `export-scenario --list`).
    scenario: Option<String>,
    /// Scenario TOML file to run instead of a built-in.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the scenario's RNG seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the scenario's trials per sweep point.
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Output directory for the sweep data and summary.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Sweep data format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(format: Format) -> Self {
        match format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// 2-photon coincidence sweep CSV (voltage axis).
    #[arg(long, value_name = "PATH")]
    two_photon: PathBuf,
    /// 1-photon singles sweep CSV used to resolve the modulo-pi branch;
    /// without it the model is written with a flagged pi ambiguity.
    #[arg(long, value_name = "PATH")]
    one_photon: Option<PathBuf>,
    /// Output directory for the model file.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Model file name.
    #[arg(long, value_name = "NAME", default_value = "phase_model.toml")]
    model_name: String,
}

#[derive(Args)]
struct ExportArgs {
    /// Built-in scenario name.
    scenario: Option<String>,
    /// List available built-in scenarios and exit.
    #[arg(long)]
    list: bool,
    /// Output directory for the exported TOML.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ContaminationArgs {
    /// Smallest pair amplitude (must be positive: at zero no 4-fold events
    /// occur and the contrast is undefined).
    #[arg(long, default_value_t = 0.02)]
    lambda_min: f64,
    /// Largest pair amplitude.
    #[arg(long, default_value_t = 0.29)]
    lambda_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Per-detected-photon efficiency (survival probability of thinning).
    #[arg(long, default_value_t = 0.6)]
    efficiency: f64,
    /// Truncation of the pair source.
    #[arg(long, default_value_t = 3)]
    max_pairs: u32,
    /// Output directory for the contrast table.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::ExportScenario(args) => cmd_export(args),
        Command::SweepContamination(args) => cmd_contamination(args),
        Command::SelfTest => return cmd_self_test(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}

fn load_scenario(name: Option<&str>, config: Option<&Path>) -> Result<Scenario, ScenarioError> {
    match (name, config) {
        (Some(name), None) => {
            builtin(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))
        }
        (None, Some(path)) => Scenario::parse(&std::fs::read_to_string(path)?),
        (Some(_), Some(_)) => Err(ScenarioError::Parse(
            "give either a built-in name or --config, not both".into(),
        )),
        (None, None) => Err(ScenarioError::Parse(
            "give a built-in scenario name or --config PATH".into(),
        )),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), ScenarioError> {
    let scenario = load_scenario(args.scenario.as_deref(), args.config.as_deref())?;
    scenario.validate()?;

    let mut overrides = RunOverrides {
        seed: args.seed,
        trials: args.trials,
        phase_model: None,
    };
    if scenario.sweep.kind == SweepKind::Voltage
        && let Some(model_file) = &scenario.sweep.model_file
    {
        let model = load_phase_model(Path::new(model_file))?;
        if scenario
            .sweep_grid()
            .iter()
            .any(|&volts| model.extrapolates(volts))
        {
            eprintln!(
                "warning: sweep extends outside the calibrated voltage range; \
                 phase values are extrapolated"
            );
        }
        overrides.phase_model = Some(model);
    }

    let outcome = run_scenario(&scenario, &overrides, args.format.into())?;
    std::fs::create_dir_all(&args.out)?;
    let sweep_path = args.out.join(&outcome.sweep_filename);
    let summary_path = args.out.join(&outcome.summary_filename);
    std::fs::write(&sweep_path, &outcome.sweep_text)?;
    std::fs::write(&summary_path, &outcome.summary_text)?;
    println!("wrote {}", sweep_path.display());
    println!("wrote {}", summary_path.display());
    print!("{}", outcome.summary_text);
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), ScenarioError> {
    let two_photon = sweep_rows_to_fringe_data(
        &read_sweep_csv(&std::fs::read_to_string(&args.two_photon)?)?,
        photonsim::analysis::SettingKind::Voltage,
    );
    let one_photon = match &args.one_photon {
        Some(path) => Some(sweep_rows_to_fringe_data(
            &read_sweep_csv(&std::fs::read_to_string(path)?)?,
            photonsim::analysis::SettingKind::Voltage,
        )),
        None => None,
    };
    let report = run_calibration(&two_photon, one_photon.as_ref())?;
    if !report.fringe.converged {
        eprintln!(
            "warning: fit did not converge within {} iterations; model written anyway",
            report.fringe.iterations
        );
    }
    if !report.disambiguated {
        eprintln!("warning: no 1-photon dataset; phase model is only fixed modulo pi");
    } else if report.ambiguous {
        eprintln!(
            "warning: both phase branches fit the 1-photon data equally well; \
             keeping the unflipped branch"
        );
    }
    std::fs::create_dir_all(&args.out)?;
    let model_path = args.out.join(&args.model_name);
    std::fs::write(&model_path, phase_model_toml(&report))?;
    println!("wrote {}", model_path.display());
    println!(
        "phi(V) = {:.6} + {:.6} V^2 + {:.6} V^3 + {:.6} V^4  (contrast {:.4}, chi2/dof {:.3})",
        report.model.alpha,
        report.model.beta,
        report.model.gamma,
        report.model.delta,
        report.fringe.contrast,
        report.fringe.chi2_per_dof(),
    );
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), ScenarioError> {
    if args.list {
        for name in builtin_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let name = args.scenario.as_deref().ok_or_else(|| {
        ScenarioError::Parse("give a built-in scenario name or --list".into())
    })?;
    let text =
        builtin_toml(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join(format!("{name}.toml"));
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_contamination(args: ContaminationArgs) -> Result<(), ScenarioError> {
    let lambdas: Vec<f64> = if args.points <= 1 {
        vec![args.lambda_min]
    } else {
        (0..args.points)
            .map(|i| {
                args.lambda_min
                    + (args.lambda_max - args.lambda_min) * i as f64 / (args.points - 1) as f64
            })
            .collect()
    };
    let options = ContaminationOptions {
        efficiency: args.efficiency,
        max_pairs: args.max_pairs,
        ..ContaminationOptions::default()
    };
    let (points, csv) = run_contamination_sweep(&lambdas, &options)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("contamination.csv");
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    for point in points {
        println!(
            "lambda = {:.4}  contrast = {:.4}",
            point.pair_amplitude, point.contrast
        );
    }
    Ok(())
}

fn cmd_self_test() -> ExitCode {
    let results = photonsim::selftest::run_all();
    let mut all_passed = true;
    for result in &results {
        let status = if result.passed { "ok" } else { "FAIL" };
        println!("self-test {:<24} {:<4} {}", result.name, status, result.detail);
        all_passed &= result.passed;
    }
    if all_passed {
        println!("self-test: all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
