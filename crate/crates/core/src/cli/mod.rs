//! Command-line front end: scenario files, the run/verify/regimes commands,
//! CSV time series and check reports.

mod config;
mod output;
mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    applicable, load_config, parse_config, Axis, ConfigKind, Functions, RegimeGrid,
    ScenarioConfig, StaticFunctions, CHECKS, REGIME_PARAMETERS,
};
pub use output::{json_path, report_json, report_text, write_csv};
pub use run::{regime_map, regime_path, run, LoopSummary, RegimeCell, Row, RunOutput};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<crate::linalg::LinalgError> for CliError {
    fn from(e: crate::linalg::LinalgError) -> Self {
        CliError::Model(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhphase", version, about = "Energy operators and real Berry phases for time-dependent non-Hermitian two-level systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured check and write the time series.
    Run {
        /// Scenario file (TOML)
        config: PathBuf,
        /// Time-series output; defaults to the config path with .csv
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Text report path; a .json twin is written next to it
        #[arg(long)]
        report: Option<PathBuf>,
        /// Override a tolerance, e.g. --tol reality=1e-12
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// Run the checks only; no CSV.
    Verify {
        /// Scenario file (TOML)
        config: PathBuf,
        /// Text report path; a .json twin is written next to it
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// Static discriminant over the [regimes] grid, or along the path.
    Regimes {
        /// Scenario file (TOML)
        config: PathBuf,
        /// Output CSV; stdout when absent
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn apply_overrides(config: &mut ScenarioConfig, tol: &[String]) -> Result<(), CliError> {
    for item in tol {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol {name}: `{value}` is not a number")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::Usage(format!("--tol {name}: must be finite and non-negative")));
        }
        config
            .tolerances
            .set(name.trim(), v)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn emit_report(out: &RunOutput, path: Option<&Path>) -> Result<(), CliError> {
    let text = report_text(out);
    match path {
        Some(p) => {
            output::write_file(p, text.as_bytes())?;
            output::write_file(&json_path(p), report_json(out).as_bytes())?;
        }
        None => to_stdout(text.as_bytes())?,
    }
    Ok(())
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn to_stdout(bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: PathBuf::from("<stdout>"),
            message: e.to_string(),
        }),
        _ => Ok(()),
    }
}

/// Default CSV path: the config file with a `.csv` extension.
fn default_csv(config_path: &Path) -> PathBuf {
    config_path.with_extension("csv")
}

/// Executes a parsed command and returns `Ok(true)` when every check
/// passed.
pub fn execute(cmd: &Command) -> Result<bool, CliError> {
    match cmd {
        Command::Run { config, csv, report, tol } => {
            let mut cfg = load_config(config)?;
            apply_overrides(&mut cfg, tol)?;
            let out = run(&cfg)?;
            let csv_path = csv.clone().or(cfg.csv.clone()).unwrap_or_else(|| default_csv(config));
            let mut buf = Vec::new();
            write_csv(&out, &mut buf, &csv_path)?;
            output::write_file(&csv_path, &buf)?;
            emit_report(&out, report.as_deref().or(cfg.report.as_deref()))?;
            Ok(out.report.pass)
        }
        Command::Verify { config, report, tol } => {
            let mut cfg = load_config(config)?;
            apply_overrides(&mut cfg, tol)?;
            let out = run(&cfg)?;
            emit_report(&out, report.as_deref().or(cfg.report.as_deref()))?;
            Ok(out.report.pass)
        }
        Command::Regimes { config, csv } => {
            let cfg = load_config(config)?;
            let dest = csv.clone().or(cfg.csv.clone());
            let mut buf = Vec::new();
            let shown = dest.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
            match &cfg.regimes {
                Some(r) => {
                    let cells = regime_map(&cfg)?;
                    output::write_regime_csv(&cells, &r.x.name, &r.y.name, &mut buf, &shown)?;
                }
                None => output::write_regime_path_csv(&regime_path(&cfg)?, &mut buf, &shown)?,
            }
            match dest {
                Some(p) => output::write_file(&p, &buf)?,
                None => to_stdout(&buf)?,
            }
            Ok(true)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
