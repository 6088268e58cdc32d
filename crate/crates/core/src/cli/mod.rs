//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 validity
//! check failure under `--strict`, 4 solver failure.

pub mod commands;
pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;
use config::{ConfigError, RunConfig};
use output::{write_csv, Meta, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Strict(String),
    /// Strict failure of `match`, which still prints its report.
    #[error("{msg}")]
    StrictReport { report: String, msg: String },
    #[error("solver failure: {0}")]
    Solver(Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Strict(_) | CliError::StrictReport { .. } => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Config(msg),
            other => CliError::Solver(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bathsim", version = output::version(), about = "Driven qubit-resonator reset: drive design, Lindblad simulation, sweeps")]
pub struct Cli {
    /// Run configuration (sectioned key = value text).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 means one per logical core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Fail with exit code 3 when a validity check misses its margin.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Override the Fock cutoff.
    #[arg(long, global = true, value_name = "N")]
    pub fock: Option<usize>,
    /// table1: evaluate only the reduced model.
    #[arg(long, global = true)]
    pub tcl_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Print the designed drive, frame vectors and validity checks.
    Match,
    /// Time evolution from the mixed qubit and empty resonator.
    Simulate,
    /// Steady-state fidelity and populations.
    Steady,
    /// Gridded rate, robustness or fidelity maps.
    Sweep,
    /// Polarization times along x, y and z.
    Table1,
}

fn load_config(cli: &Cli, optional: bool) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_text(&text)?
        }
        None if optional => RunConfig {
            system: crate::model::SystemParams::typical(),
            relaxation: Default::default(),
            drive: None,
            time: None,
            sweep: None,
            tolerances: Default::default(),
            hash: "none".into(),
        },
        None => return Err(CliError::Config("missing --config".into())),
    };
    if let Some(n) = cli.fock {
        if n == 0 {
            return Err(CliError::Config("--fock must be at least 1".into()));
        }
        cfg.system.fock = n;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, meta: &Meta, table: &Table) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let f = BufWriter::new(File::create(path)?);
            write_csv(f, meta, table)?;
        }
        None => write_csv(io::stdout().lock(), meta, table)?,
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Match => {
            let cfg = load_config(cli, false)?;
            match commands::cmd_match(&cfg, cli.strict) {
                Ok(report) => print!("{report}"),
                Err(CliError::StrictReport { report, msg }) => {
                    print!("{report}");
                    return Err(CliError::Strict(msg));
                }
                Err(e) => return Err(e),
            }
        }
        Command::Simulate => {
            let cfg = load_config(cli, false)?;
            let (meta, table) = commands::cmd_simulate(&cfg, cli.strict)?;
            emit(out, &meta, &table)?;
        }
        Command::Steady => {
            let cfg = load_config(cli, false)?;
            let (meta, table, warnings) = commands::cmd_steady(&cfg, cli.strict)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            emit(out, &meta, &table)?;
        }
        Command::Sweep => {
            let cfg = load_config(cli, false)?;
            let (meta, table) = commands::cmd_sweep(&cfg, cli.strict, cli.workers)?;
            emit(out, &meta, &table)?;
        }
        Command::Table1 => {
            let cfg = load_config(cli, true)?;
            let (text, meta, table) = commands::cmd_table1(&cfg, cli.tcl_only, cli.strict, cli.workers)?;
            let mut stdout = io::stdout().lock();
            write!(stdout, "{text}")?;
            match out {
                Some(_) => emit(out, &meta, &table)?,
                None => {
                    writeln!(stdout)?;
                    write_csv(stdout, &meta, &table)?;
                }
            }
        }
    }
    Ok(())
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
