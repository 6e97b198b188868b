//! Command-line front end: `simulate`, `sweep`, `check-identifier`, `validate`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 integration failure,
//! 3 threshold failure under `--assert`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adaptive_regulator::scenario::{check_identifier, is_non_increasing, run_scenario, run_sweep, sweep_cell_config, ScenarioConfig, SweepAxis};
use adaptive_regulator::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_INTEGRATION: u8 = 2;
const EXIT_ASSERT: u8 = 3;
const DEFAULT_SWEEP_SLACK: f64 = 0.05;

#[derive(Parser)]
#[command(name = "aimreg", version, about = "Adaptive internal-model regulator simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, write the configured CSV and summary, print the summary.
    Simulate {
        config: PathBuf,
        /// Fail with exit code 3 if `assert.max_steady_state_y` is exceeded.
        #[arg(long)]
        assert: bool,
    },
    /// Vary one parameter and print a table of steady-state error and settling time.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Fail with exit code 3 unless the steady-state error is non-increasing along the sweep.
        #[arg(long)]
        assert: bool,
    },
    /// Verify optimality, stability and regularity of the configured identifier.
    CheckIdentifier {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail with exit code 3 if any property fails.
        #[arg(long)]
        assert: bool,
    },
    /// Parse and validate a configuration without simulating.
    Validate { config: PathBuf },
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::IntegrationBlowup { .. } | Error::BranchPoint { .. } => EXIT_INTEGRATION,
        Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::Io(_) | Error::Json(_) => EXIT_CONFIG,
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, u8> {
    ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_CONFIG
    })
}

fn fail(e: Error) -> u8 {
    eprintln!("error: {e}");
    error_code(&e)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn execute(command: Command) -> Result<(), u8> {
    match command {
        Command::Simulate { config, assert } => {
            let cfg = load(&config)?;
            let result = run_scenario(&cfg).map_err(fail)?;
            println!("{}", to_json(&result.summary));
            if let (true, Some(limit)) = (assert, cfg.assertions.max_steady_state_y) {
                if result.summary.steady_state_max_y > limit {
                    eprintln!("assertion failed: steady-state max |y| {} > {limit}", result.summary.steady_state_max_y);
                    return Err(EXIT_ASSERT);
                }
            }
        }
        Command::Sweep { config, axis, values, assert } => {
            let cfg = load(&config)?;
            for &v in &values {
                sweep_cell_config(&cfg, axis, v).and_then(|c| c.validate()).map_err(|e| {
                    eprintln!("error: sweep value {v}: {e}");
                    EXIT_CONFIG
                })?;
            }
            let rows = run_sweep(&cfg, axis, &values).map_err(fail)?;
            println!("value,steady_state_max_y,settling_time_s,error");
            let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            for row in &rows {
                println!("{},{},{},{}", row.value, fmt(row.steady_state_max_y), fmt(row.settling_time_s), row.error.as_deref().unwrap_or(""));
            }
            if rows.iter().any(|r| r.error.is_some()) {
                eprintln!("one or more sweep cells failed");
                return Err(EXIT_INTEGRATION);
            }
            if assert && !is_non_increasing(&rows, cfg.assertions.sweep_slack.unwrap_or(DEFAULT_SWEEP_SLACK)) {
                eprintln!("assertion failed: steady-state error is not non-increasing along the sweep");
                return Err(EXIT_ASSERT);
            }
        }
        Command::CheckIdentifier { config, trials, seed, assert } => {
            let cfg = load(&config)?;
            let report = check_identifier(&cfg, trials, seed).map_err(fail)?;
            println!("{}", to_json(&report));
            if assert && !(report.optimality && report.stability && report.regularity) {
                eprintln!("assertion failed: identifier requirement not met");
                return Err(EXIT_ASSERT);
            }
        }
        Command::Validate { config } => {
            load(&config)?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
