//! Command-line front end for `davies-lab`: stationarity checks, σ sweeps,
//! state evolution, a self-test and bundle export.
//!
//! Exit codes: `0` all checks pass, `1` a check failed, `2` configuration or
//! input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use davies_lab::generators::Fault;

pub mod commands;
pub mod config;
pub mod export;
pub mod report;

pub use commands::RunOptions;
pub use config::{ExperimentConfig, Format};
pub use report::RunReport;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Library(#[from] davies_lab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "davies", version, about = "Localised Davies generators: checks, sweeps and evolution")]
pub struct Cli {
    /// TOML experiment config; built-in defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run only the named check (repeatable).
    #[arg(long = "check", global = true, value_name = "NAME")]
    pub checks: Vec<String>,
    /// Break the balance condition and require a large stationarity residual.
    #[arg(long, global = true)]
    pub negative_control: bool,
    /// Multiplies every tolerance, e.g. 1e-3 to tighten by a factor 1000.
    #[arg(long, global = true, value_name = "FACTOR")]
    pub tolerance_scale: Option<f64>,
    #[arg(long, global = true, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    FlipOverlapSign,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Check that the Gibbs state is stationary.
    VerifyStationarity,
    /// Distance to the Davies limit, ‖B‖ and ‖b₁‖₁ over a decreasing σ list.
    SweepSigma,
    /// Evolve a state and check trace, positivity, contraction and Choi.
    Evolve,
    /// Desk-scale invariant suite.
    Selftest,
    /// Assembled generator as JSON with base64 matrices.
    Export,
}

/// Rendered output of one invocation.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    pub report: Option<RunReport>,
    pub out: Option<PathBuf>,
}

impl Output {
    pub fn exit_code(&self) -> u8 {
        match &self.report {
            Some(r) if !r.pass => EXIT_CHECK_FAILED,
            _ => EXIT_PASS,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.tolerance_scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Config("--tolerance-scale must be positive".into()));
        }
    }
    let opts = RunOptions {
        seed: cli.seed,
        checks: cli.checks.clone(),
        negative_control: cli.negative_control,
        tolerance_scale: cli.tolerance_scale,
        fault: cli.inject_fault.map(|f| match f {
            FaultArg::FlipOverlapSign => Fault::FlipOverlapSign,
        }),
    };
    let format = cli.format.unwrap_or(cfg.output.format);
    let out = cli.out.clone().or_else(|| cfg.output.path.clone());
    let report = match cli.command {
        Command::VerifyStationarity => commands::verify_stationarity(&cfg, &opts)?,
        Command::SweepSigma => commands::sweep_sigma(&cfg, &opts)?,
        Command::Evolve => commands::evolve(&cfg, &opts)?,
        Command::Selftest => commands::selftest(&cfg, &opts)?,
        Command::Export => {
            if cli.format == Some(Format::Csv) {
                return Err(CliError::Config("export writes JSON only".into()));
            }
            let e = commands::export(&cfg, &opts)?;
            let body = serde_json::to_string_pretty(&e).expect("export serialises");
            return Ok(Output {
                body,
                report: None,
                out,
            });
        }
    };
    let body = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    Ok(Output {
        body,
        report: Some(report),
        out,
    })
}

/// Runs the CLI and maps the outcome to an exit code.
pub fn main_with(cli: Cli) -> ExitCode {
    let output = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let written = match &output.out {
        Some(path) => std::fs::write(path, &output.body),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.body.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(r) = &output.report {
        eprint!("{}", r.summary());
    }
    ExitCode::from(output.exit_code())
}
