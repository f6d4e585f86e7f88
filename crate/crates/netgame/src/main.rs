//! `netgame`: simulate projected gradient play in repeated network games
//! over randomly sampled networks, solve the expected-game equilibrium, and
//! verify the convergence and regret guarantees numerically.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netgame::cli::{cmd_equilibrium, cmd_run, cmd_sweep, cmd_verify, Overrides, SweepParam};

#[derive(Parser)]
#[command(
    name = "netgame",
    version,
    about = "Learning dynamics in repeated network games over random networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replication count.
    #[arg(long)]
    replications: Option<u64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            replications: self.replications,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the expected-game equilibrium and export it as a CSV vector.
    Equilibrium(CommonArgs),
    /// Run replicated learning dynamics; write traces and a summary.
    Run(CommonArgs),
    /// Run the verification battery; exits nonzero on any failed check.
    Verify(CommonArgs),
    /// Evaluate equilibrium and bound constants across a parameter grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Which parameter the grid varies.
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Equilibrium(args) => cmd_equilibrium(&args.config, &args.overrides()),
        Command::Run(args) => cmd_run(&args.config, &args.overrides()),
        Command::Verify(args) => cmd_verify(&args.config, &args.overrides()),
        Command::Sweep { common, param, values } => {
            cmd_sweep(&common.config, &common.overrides(), *param, values)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netgame: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
