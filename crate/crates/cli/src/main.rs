use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod analysis;
mod artifacts;
mod verify;

#[derive(Parser)]
#[command(
    name = "dichotomy",
    version,
    about = "Evans determinants, parity and bifurcation sets for families of linear ODEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in worked examples and report pass/fail per check.
    Verify(VerifyArgs),
    /// Evans determinant, parity and zeros along an interval of parameters.
    Path(RunArgs),
    /// Holonomy and the Pejsachowicz class over a circle of parameters.
    Circle(RunArgs),
    /// Sign map of the Evans determinant over the unit disc.
    Grid(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json, samples.csv and plot data.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override `numerics.truncation_time`.
    #[arg(long = "truncation-time", value_name = "T")]
    truncation_time: Option<f64>,
    /// Override the node count (interval, circle) or grid resolution (disc).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Print the full report as JSON instead of a summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only the checks of this example group.
    #[arg(long, value_name = "NAME")]
    only: Option<String>,
    /// Print a machine-readable summary.
    #[arg(long)]
    json: bool,
    /// Seed of the random perturbation suite.
    #[arg(long, value_name = "U64", default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    /// Disc resolution for the grid examples.
    #[arg(long, value_name = "N", default_value_t = verify::DEFAULT_DISC_RESOLUTION)]
    grid: usize,
    /// Override the truncation time of every example.
    #[arg(long = "truncation-time", value_name = "T")]
    truncation_time: Option<f64>,
    /// Also write report.json into this directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Exit status for user errors (bad config, wrong topology, I/O).
const EXIT_VALIDATION: u8 = 2;
/// Exit status for numerical failures and failed checks.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
enum Failure {
    Core(dichotomy::Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
    ChecksFailed(usize),
}

impl From<dichotomy::Error> for Failure {
    fn from(e: dichotomy::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_validation() => EXIT_VALIDATION,
            Failure::Core(_) | Failure::ChecksFailed(_) => EXIT_NUMERICAL,
            Failure::Io(..) | Failure::Usage(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
            Failure::Usage(m) => f.write_str(m),
            Failure::ChecksFailed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("DICHOTOMY_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "DICHOTOMY_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Verify(a) => verify::run(&a),
        Command::Path(a) => analysis::run(analysis::Kind::Path, &a),
        Command::Circle(a) => analysis::run(analysis::Kind::Circle, &a),
        Command::Grid(a) => analysis::run(analysis::Kind::Grid, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
