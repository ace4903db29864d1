use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cli::commands::{cmd_online, cmd_recalibrate, cmd_run, cmd_select};
use cli::CliError;

#[derive(Parser)]
#[command(name = "stabsel", about = "Stability-budgeted selection over conformal prediction sets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed list in the config with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; results go to stdout if omitted.
    /// Also settable via STABSEL_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the rayon thread pool. Also settable via STABSEL_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One-shot selection over a comma-separated size profile.
    Select {
        /// Comma-separated set sizes, e.g. "0.2,0.5,0.9".
        #[arg(long)]
        sizes: String,
        /// Comma-separated prior weights (uniform if omitted).
        #[arg(long)]
        prior: Option<String>,
        /// minse | ada_minse | exponential | laplace.
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        alpha_prime: Option<f64>,
        /// Seed for the sampled (laplace) mechanism.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Batch coverage experiment from a TOML config.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Online AdaCOMA experiment with a COMA baseline.
    Online {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Post-selection recalibration on a user-supplied CSV dataset.
    Recalibrate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Resolves --out / --threads against their environment fallbacks and
/// installs the global thread pool.
fn prepare(common: &CommonArgs) -> Result<Option<PathBuf>, CliError> {
    let threads = match common.threads {
        Some(t) => Some(t),
        None => match std::env::var("STABSEL_THREADS") {
            Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
                CliError::Config(format!("threads: STABSEL_THREADS='{raw}' is not an integer"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(common
        .out
        .clone()
        .or_else(|| std::env::var("STABSEL_OUT").ok().map(PathBuf::from)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Select { sizes, prior, mechanism, eta, tau, alpha, alpha_prime, seed } => {
            cmd_select(
                &sizes,
                prior.as_deref(),
                &mechanism,
                eta,
                tau,
                alpha,
                alpha_prime,
                seed,
                &mut std::io::stdout(),
            )
        }
        Command::Run { common } => {
            let out = prepare(&common)?;
            cmd_run(&common.config, common.seed, out)
        }
        Command::Online { common } => {
            let out = prepare(&common)?;
            cmd_online(&common.config, common.seed, out)
        }
        Command::Recalibrate { common } => {
            let out = prepare(&common)?;
            cmd_recalibrate(&common.config, common.seed, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
