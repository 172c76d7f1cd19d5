use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dfs_cavity::Error;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "dfs-cavity", version, about = "Two cavity modes damped by a common reservoir")]
struct Cli {
    /// Only report errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,

    /// More diagnostics on stderr (repeat for debug output).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads for sweeps and certification cases.
    #[arg(long, global = true, env = "DFS_CAVITY_JOBS")]
    jobs: Option<usize>,

    /// Reject unknown keys in configuration files.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Ideal,
    Diagonal,
    General,
    Protocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Oracle,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Oracle,
    Odes,
    Dfs,
    All,
}

/// Where the coefficients come from.
#[derive(Debug, clap::Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Run configuration (frame frequencies `(δ, 0)`).
    #[arg(long)]
    config: Option<PathBuf>,

    /// JSON object with the ten coefficients `omega1 … delta21`.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transfer amplitudes and factorisation exponents at given times.
    Coeffs {
        #[command(flatten)]
        source: Source,
        /// Propagation times.
        #[arg(long = "time", short, required = true, num_args = 1..)]
        times: Vec<f64>,
    },
    /// Evolve an initial field state.
    Propagate {
        #[command(flatten)]
        source: Source,
        /// vacuum, one-photon, fock:N1,N2 or dfs:KAPPA
        #[arg(long, default_value = "one-photon")]
        state: commands::StateSpec,
        /// Relative phase of the one-photon state.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long = "time", short)]
        time: f64,
        #[arg(long, value_enum, default_value = "analytic")]
        method: Method,
        /// Photon cutoff per mode (defaults to the configured value, else 3).
        #[arg(long)]
        n_trunc: Option<usize>,
        /// Include the full density matrix in the output.
        #[arg(long)]
        matrix: bool,
    },
    /// Fringe `P_e(T)` over the configured grid.
    PeCurve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "general")]
        model: Model,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Measured points (`T,pe[,sigma]`) to compare against the curve.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Time shift applied to the overlay (defaults to the configured one).
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        /// Search the offset minimising the RMS residual in LO,HI.
        #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
        fit_offset: Option<Vec<f64>>,
        #[arg(long, default_value_t = 201)]
        offset_steps: usize,
        /// JSON destination for the residual report (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fringes for cross rates `k12 = k21 = ratio·√(k11 k22)`.
    DfsScan {
        #[arg(long)]
        config: PathBuf,
        /// Ratios to scan (defaults to the configured list).
        #[arg(long, value_delimiter = ',')]
        ratio_grid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON destination for the per-ratio root analysis (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate the two-atom pulse sequence at given entry times.
    Protocol {
        #[arg(long)]
        config: PathBuf,
        /// Probe entry times (defaults to the configured grid).
        #[arg(long = "time", short, num_args = 1..)]
        times: Vec<f64>,
        #[arg(long, value_enum, default_value = "analytic")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        n_trunc: usize,
    },
    /// Cross-validate the evaluation routes against each other.
    Certify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cases per oracle family.
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    /// Certification ran but some checks failed.
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) if e.is_validation() => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 1,
            Failure::Checks(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Checks(n) => write!(f, "{n} certification check(s) failed"),
        }
    }
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    }
    let strict = cli.strict;
    match cli.command {
        Command::Coeffs { source, times } => commands::coeffs(&source, strict, &times),
        Command::Propagate { source, state, phi, time, method, n_trunc, matrix } => {
            commands::propagate(&source, strict, commands::PropagateArgs { state, phi, time, method, n_trunc, matrix })
        }
        Command::PeCurve { config, model, out, overlay, offset, fit_offset, offset_steps, report } => commands::pe_curve(
            &config,
            strict,
            commands::PeCurveArgs { model, out, overlay, offset, fit_offset, offset_steps, report },
        ),
        Command::DfsScan { config, ratio_grid, out, report } => commands::dfs_scan(&config, strict, ratio_grid, out, report),
        Command::Protocol { config, times, method, n_trunc } => commands::protocol(&config, strict, &times, method, n_trunc),
        Command::Certify { suite, seed, cases, out } => commands::certify(suite, seed, cases, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
