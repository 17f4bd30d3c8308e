use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use rbffd_core::harness::{run_convergence, run_green, run_heterogeneous, run_planewave, run_pollution, run_solve, run_truncation};
use rbffd_core::{Error, ExperimentReport};

mod config;

use config::{parse_config, Command, ConfigError, Experiment, Overrides, RunConfig};

/// Bessel RBF-FD Helmholtz experiments.
///
/// Parameters come from the command defaults, then the `--config` file, then
/// `--set` overrides. Results are written as `<experiment>.csv` and
/// `<experiment>.json` in the output directory.
#[derive(Debug, Parser)]
#[command(name = "rbffd", version)]
struct Cli {
    /// Experiment to run; overrides "command" in the configuration file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: results].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized node placement.
    #[arg(long)]
    seed: Option<u64>,
    /// Do not print the result table.
    #[arg(long)]
    quiet: bool,
    /// Override a parameter, e.g. `--set ng=8` or `--set policy.exponent=4`.
    /// Values are parsed as JSON, falling back to a plain string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Geometry(_) | Error::Io { .. } | Error::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprint!("{e}");
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("rbffd: configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("rbffd: numerical failure: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let text = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?),
        None => None,
    };
    let ov = Overrides {
        command: cli.command,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
        set: cli.set,
    };
    let cfg = parse_config(text.as_deref(), &ov)?;
    if cli.dry_run {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("configuration serializes"));
        return Ok(());
    }
    check_writable(&cfg.out)?;
    let report = dispatch(&cfg)?;
    report.write(&cfg.out)?;
    if !cfg.quiet {
        print!("{}", report.to_csv()?);
        eprintln!("wrote {}", cfg.out.join(format!("{}.csv", report.experiment)).display());
    }
    Ok(())
}

fn dispatch(cfg: &RunConfig) -> Result<ExperimentReport, Failure> {
    Ok(match cfg.experiment()? {
        Experiment::Solve(c) => run_solve(&c)?,
        Experiment::Truncation(c) => run_truncation(&c)?,
        Experiment::Pollution(c) => run_pollution(&c)?,
        Experiment::Convergence(c) => run_convergence(&c)?,
        Experiment::PlaneWave(c) => run_planewave(&c)?,
        Experiment::Green(c) => run_green(&c)?,
        Experiment::Heterogeneous(c) => run_heterogeneous(&c)?,
    })
}

/// Fails early, before any solve, if results could not be saved.
fn check_writable(dir: &Path) -> Result<(), Failure> {
    let bad = |e: std::io::Error| Failure::Config(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(bad)?;
    let probe = dir.join(".rbffd-write-check");
    fs::write(&probe, b"").map_err(bad)?;
    let _ = fs::remove_file(probe);
    Ok(())
}
