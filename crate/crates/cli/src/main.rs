//! `equilib`: spectrum analysis, bound certification and time sweeps for
//! finite quantum systems.

mod commands;
mod io;

use clap::{Args, Parser, Subcommand};
use equilib_core::bounds::GridSpec;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
    #[error("{0}: {1}")]
    Input(PathBuf, equilib_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] equilib_core::Error),
    #[error("{0} bound violation(s)")]
    Violations(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violations(_) => 1,
            CliError::Core(e) | CliError::Input(_, e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "equilib", version, about = "Finite-time equilibration bounds for finite quantum systems")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gap list, gap density curve and gap statistics of a Hamiltonian.
    AnalyzeSpectrum(SpectrumArgs),
    /// Checks measured time averages against the closed-form bounds.
    VerifyBounds(RunArgs),
    /// Time-averaged deviation and distinguishability as functions of T.
    #[command(name = "sweep-T")]
    SweepT(RunArgs),
    /// Distinguishability of a state from a reference, and the bound chain for
    /// a measurement set.
    Distinguishability(DistinguishArgs),
    /// Writes Hamiltonian, state, observable and measurement files for a model.
    GenerateModel(GenerateArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long)]
    hamiltonian: PathBuf,
    /// `lo:hi:n:log|lin`; default eps_min, then 31 geometric points from 2 eps_min to the gap range.
    #[arg(long = "eps-grid", value_parser = GridSpec::parse)]
    eps_grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long)]
    state: PathBuf,
    /// Observable for the deviation bound; a seeded random one when absent.
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// `A,B`: the first factor of dimension A is the subsystem.
    #[arg(long = "subsystem-dims", value_parser = parse_dims)]
    subsystem_dims: Option<(usize, usize)>,
    /// `lo:hi:n:log|lin`; default 20 log points over [0.1, 1e4] / eps_min.
    #[arg(long = "T-grid", value_parser = GridSpec::parse)]
    t_grid: Option<GridSpec>,
    /// `lo:hi:n:log|lin`; default eps_min, then 31 geometric points from 2 eps_min to the gap range.
    #[arg(long = "eps-grid", value_parser = GridSpec::parse)]
    eps_grid: Option<GridSpec>,
    /// Quadrature step; default a quarter of the largest admissible step.
    #[arg(long)]
    pitch: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies every bound; for testing the certifier.
    #[arg(long, hide = true)]
    bound_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct DistinguishArgs {
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long)]
    state: PathBuf,
    /// Reference state; the dephased state when absent.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Windows for the measurement-set bound chain.
    #[arg(long = "T-grid", value_parser = GridSpec::parse)]
    t_grid: Option<GridSpec>,
    /// Gap-density parameter for the chain; default eps_min.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    pitch: Option<f64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Model JSON, e.g. `{"family":"gue","d":16,"seed":3}`.
    #[arg(long)]
    model: PathBuf,
    /// Overrides the seed in the model file.
    #[arg(long)]
    seed: Option<u64>,
    /// `haar_pure`, `rank_r_mixed:R` or `energy_uniform:N`.
    #[arg(long, default_value = "haar_pure")]
    state_kind: String,
    /// POVMs in the generated measurement set.
    #[arg(long, default_value_t = 3)]
    povms: usize,
    #[arg(long, default_value_t = 12)]
    max_outcomes: usize,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad dimension '{a}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad dimension '{b}'"))?;
    if a == 0 || b == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((a, b))
}

fn install_tolerances() -> Result<(), CliError> {
    if let Ok(json) = std::env::var("EQUILIB_TOL_OVERRIDES") {
        let tol = equilib_core::tolerance::Tolerances::from_overrides(&json)
            .map_err(|e| CliError::Usage(format!("EQUILIB_TOL_OVERRIDES: {e}")))?;
        equilib_core::tolerance::install(tol);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    install_tolerances()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(cli.out.clone(), e.to_string()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let out = cli.out;
    pool.install(|| match cli.command {
        Command::AnalyzeSpectrum(a) => commands::analyze_spectrum(&a, &out),
        Command::VerifyBounds(a) => commands::verify_bounds(&a, &out),
        Command::SweepT(a) => commands::sweep_t(&a, &out),
        Command::Distinguishability(a) => commands::distinguishability(&a, &out),
        Command::GenerateModel(a) => commands::generate_model(&a, &out),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
