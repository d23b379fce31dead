use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chicken_coop::cli::{cmd_ablate, cmd_analyze, cmd_emerge, cmd_transmit, RunOpts};

#[derive(Parser)]
#[command(name = "chicken-coop", version, about = "Dominance-hierarchy experiments in the Chicken Coop environment")]
struct Cli {
    /// Number of worker threads for population training (default: all cores).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train independent populations and record hierarchy emergence.
    Emerge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep opponent perception accuracy and record rapport trajectories.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Transplant experienced agents into naive populations and measure
    /// transmission fidelity.
    Transmit {
        #[arg(long)]
        config: PathBuf,
        /// Output directory of a prior `emerge` run holding source
        /// populations.
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a prior run: hierarchy census, per-rank aggressiveness and
    /// rank-linearity profile.
    Analyze {
        /// Directory written by a prior `emerge` run.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.parallelism {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure parallelism: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Emerge { config, out, seed } => cmd_emerge(&RunOpts { config, out, seed }),
        Command::Ablate { config, out, seed } => cmd_ablate(&RunOpts { config, out, seed }),
        Command::Transmit {
            config,
            snapshots,
            out,
            seed,
        } => cmd_transmit(&RunOpts { config, out, seed }, &snapshots),
        Command::Analyze { results, out } => cmd_analyze(&results, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
