use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polaron_cli::config::{RunConfig, SweepConfig};
use polaron_cli::figures::write_figures;
use polaron_cli::run::run;
use polaron_cli::sweep::sweep;
use polaron_cli::CliError;
use polaron_core::Execution;

/// Polaron-frame simulations of a qubit coupled to a lossy cavity.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON run (or sweep) configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Write every figure configuration into the output directory.
    #[arg(long)]
    seed_figures: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Renormalized splitting against a swept parameter.
    Deltar,
    /// Excitation probability in time.
    Dynamics,
    /// Maximum derivative of the excitation probability against g.
    Onset,
    /// Emission spectra.
    Spectrum,
    /// Discretized bath fidelity.
    Bathcheck,
    /// Star-to-chain mapping.
    Chainmap,
    /// Grid of runs over up to three model parameters.
    Sweep,
}

impl Command {
    fn experiment(self) -> Option<&'static str> {
        match self {
            Command::Deltar => Some("delta_r_sweep"),
            Command::Dynamics => Some("dynamics"),
            Command::Onset => Some("onset_scan"),
            Command::Spectrum => Some("spectrum"),
            Command::Bathcheck => Some("bath_check"),
            Command::Chainmap => Some("chain_map"),
            Command::Sweep => None,
        }
    }
}

fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> Result<PathBuf, CliError> {
    flag.or(config)
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.seed_figures {
        let out = output_dir(cli.out.as_deref(), None)?;
        for name in write_figures(&out)? {
            println!("{}", out.join(name).display());
        }
        if cli.command.is_none() {
            return Ok(());
        }
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (see --help)".into()));
    };
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    match command.experiment() {
        Some(expected) => {
            let cfg = RunConfig::load(path)?;
            if cfg.experiment.name() != expected {
                return Err(CliError::field(
                    "experiment",
                    format!(
                        "`{}` cannot be run by this subcommand (expected `{expected}`)",
                        cfg.experiment.name()
                    ),
                ));
            }
            let out = output_dir(cli.out.as_deref(), cfg.output_dir.as_deref())?;
            run(&cfg, &out, Execution::Parallel)?;
        }
        None => {
            let cfg = SweepConfig::load(path)?;
            let out = output_dir(cli.out.as_deref(), cfg.output_dir.as_deref())?;
            let results = sweep(&cfg, &out)?;
            let failed = results.iter().filter(|r| r.outcome.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} points failed", results.len());
            }
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_jobs(
    jobs: Option<usize>,
    f: impl FnOnce() -> Result<(), CliError> + Send,
) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_jobs(
    _jobs: Option<usize>,
    f: impl FnOnce() -> Result<(), CliError>,
) -> Result<(), CliError> {
    f()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs == Some(0) {
        eprintln!("error: {}", CliError::field("--jobs", "must be positive"));
        return ExitCode::from(2);
    }
    match with_jobs(cli.jobs, || dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
