//! `attitude` command-line driver.
//!
//! Exit codes: 0 success, 1 property failure or output I/O error,
//! 2 infeasible gains, 3 integration failure, 64 usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attitude_core::harness::{config, run_scenario, CaseId, HarnessError, RunOutput, Scenario, ScenarioConfig};
use attitude_core::properties;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

const EXIT_FAILURE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "attitude", version, about = "Adaptive attitude tracking simulations on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write timeseries.csv and metrics.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Dotted-key override, e.g. `gains.k_r=0.05`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Run even when the gain conditions fail.
        #[arg(long)]
        force_gains: bool,
    },
    /// Print the gain-condition report for a scenario.
    ValidateGains {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the three bundled scenarios and write fig1.csv, fig2.csv, fig3.csv.
    PaperFigures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the seeded identity and bound checks.
    Properties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Infeasible(_) => EXIT_INFEASIBLE,
            HarnessError::Integration { .. } | HarnessError::NonFinite(_) => EXIT_INTEGRATION,
            HarnessError::Io(_) => EXIT_FAILURE,
            _ => EXIT_USAGE,
        };
        if let HarnessError::Infeasible(report) = &e {
            print!("{report}");
        }
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, out, overrides, force_gains } => cmd_run(&config, &out, overrides, force_gains),
        Command::ValidateGains { config, overrides } => cmd_validate_gains(&config, &overrides),
        Command::PaperFigures { out } => cmd_paper_figures(&out),
        Command::Properties { seed, cases } => cmd_properties(seed, cases),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path, overrides: &[String]) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read config {}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_toml_with_overrides(&text, overrides)?;
    Ok(cfg.build()?)
}

fn write_outputs(dir: &Path, csv_name: &str, out: &RunOutput) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let csv_path = dir.join(csv_name);
    let file = fs::File::create(&csv_path).map_err(|e| io_failure(&csv_path, e))?;
    out.series
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", csv_path.display())))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
}

fn cmd_run(config: &Path, out_dir: &Path, mut overrides: Vec<String>, force: bool) -> Result<(), Failure> {
    if force {
        overrides.push("force_gains=true".into());
    }
    let scenario = load(config, &overrides)?;
    let output = run_scenario(&scenario)?;
    if !output.gain_report.feasible {
        eprintln!("warning: gain conditions violated, run forced: {}", output.gain_report.violations.join("; "));
    }
    write_outputs(out_dir, "timeseries.csv", &output)?;
    let metrics_path = out_dir.join("metrics.txt");
    fs::write(&metrics_path, output.metrics.to_key_value()).map_err(|e| io_failure(&metrics_path, e))?;
    let m = &output.metrics;
    println!(
        "{}: {} samples, final |e_R| = {:.3e}, final |e_W| = {:.3e}, V increases = {}",
        scenario.case_id.as_str(),
        output.series.len(),
        m.final_e_r,
        m.final_e_omega,
        m.v_violations
    );
    Ok(())
}

fn cmd_validate_gains(config: &Path, overrides: &[String]) -> Result<(), Failure> {
    let scenario = load(config, overrides)?;
    let report = scenario.gain_report()?;
    print!("{report}");
    if report.feasible {
        Ok(())
    } else {
        Err(Failure::new(EXIT_INFEASIBLE, format!("gain conditions violated: {}", report.violations.join("; "))))
    }
}

fn cmd_paper_figures(out_dir: &Path) -> Result<(), Failure> {
    let scenarios = CaseId::PAPER
        .iter()
        .map(|case| {
            let text = config::bundled(*case).expect("paper cases are bundled");
            Ok(ScenarioConfig::from_toml(text)?.build()?)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let outputs: Vec<Result<RunOutput, HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(move || run_scenario(s))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    for (i, (scenario, output)) in scenarios.iter().zip(outputs).enumerate() {
        let output = output?;
        let name = format!("fig{}.csv", i + 1);
        write_outputs(out_dir, &name, &output)?;
        println!("{name}: {} final |e_R| = {:.3e}", scenario.case_id.as_str(), output.metrics.final_e_r);
    }
    Ok(())
}

fn cmd_properties(seed: u64, cases: usize) -> Result<(), Failure> {
    let outcomes = properties::run_all(seed, cases);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAILURE, format!("{failed} properties failed")))
    }
}
