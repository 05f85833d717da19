//! `infofresh` command-line driver: TOML config in, CSV out.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::Output;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;

/// Worker-thread count for sweeps and multi-seed runs.
pub const WORKERS_ENV: &str = "INFOFRESH_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "infofresh", version, about = "Mutual-information freshness of sampled Markov sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config; the bundled policy_sweep setup when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use seeds 1..=N.
    #[arg(long, global = true)]
    pub seeds: Option<u64>,
    #[arg(long, global = true)]
    pub horizon: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub zmax: Option<u64>,
    /// Also write a matplotlib script next to the CSV (needs an output path).
    #[arg(long, global = true)]
    pub plot_script: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mutual information against age for the configured source.
    MiCurve,
    /// Optimal threshold and waiting function.
    Solve,
    /// Optimal, zero-wait and uniform freshness across a parameter grid.
    Sweep,
    /// Simulate each configured policy for every seed.
    Simulate,
    /// Step-by-step event log of one run.
    Trace,
    /// Compare the solver against exhaustive search on random instances.
    OracleCheck,
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            ExperimentConfig::from_toml(&text, &path.display().to_string())?
        }
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        seeds: cli.seeds,
        horizon: cli.horizon,
        tol: cli.tol,
        z_max: cli.zmax,
    });
    if cli.seeds == Some(0) {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    config.validate()?;
    Ok(config)
}

pub fn execute(command: Command, config: &ExperimentConfig) -> Result<Output, CliError> {
    match command {
        Command::MiCurve => commands::mi_curve(config),
        Command::Solve => commands::solve(config),
        Command::Sweep => commands::sweep(config),
        Command::Simulate => commands::simulate_policies(config),
        Command::Trace => commands::trace(config),
        Command::OracleCheck => commands::oracle(config),
    }
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{WORKERS_ENV}: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { context: format!("writing {}", path.display()), source: e })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_workers()?;
    let config = load_config(cli)?;
    let out_path = config.output.as_ref().map(PathBuf::from);
    if cli.plot_script && out_path.is_none() {
        return Err(CliError::Usage("--plot-script needs --out or an output path in the config".into()));
    }
    let output = execute(cli.command, &config)?;
    match &out_path {
        Some(path) => write_file(path, &output.csv)?,
        None => std::io::stdout()
            .write_all(output.csv.as_bytes())
            .map_err(|e| CliError::Io { context: "writing stdout".into(), source: e })?,
    }
    if let (true, Some(path)) = (cli.plot_script, &out_path) {
        let script_path = path.with_extension("py");
        write_file(&script_path, &plot::script(cli.command, path))?;
        eprintln!("plot script: {}", script_path.display());
    }
    for line in &output.report {
        eprintln!("{line}");
    }
    match output.failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            e.exit_code()
        }
    }
}
