//! Batch front-end for the coupled wave / thermoelastic-beam simulator.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use acoustruct::runner::{self, RunOverrides};

#[derive(Parser)]
#[command(
    name = "acoustruct",
    version,
    about = "Structure-preserving coupled wave/beam simulator and attractor diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML)
    config: PathBuf,
    /// Output directory (default: runs/<config-stem>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel trajectories (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config
    Run(CommonArgs),
    /// Run a (gamma, kappa) parameter sweep config
    Sweep(CommonArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, is_sweep) = match cli.command {
        Command::Run(a) => (a, false),
        Command::Sweep(a) => (a, true),
    };
    let overrides = RunOverrides {
        out_dir: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    let artifacts = if is_sweep {
        runner::sweep(&args.config, &overrides)
    } else {
        runner::run(&args.config, &overrides)
    }
    .with_context(|| format!("running {}", args.config.display()))?;

    println!("artifacts written to {}", artifacts.dir.display());
    if let Ok(line) = serde_json::to_string(&artifacts.summary) {
        println!("{line}");
    }
    Ok(())
}
