use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clickstat_core::commands;
use clickstat_core::config::RunConfig;

/// Counting statistics of photon emissions under finite-response-time detection.
#[derive(Parser)]
#[command(name = "clickstat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "clickstat.toml")]
    config: PathBuf,

    /// Override the configured master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (overrides `output.dir`; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the effective decay rate over an x grid.
    GammaEff,
    /// Large-deviation sweep over the conjugate field, one CSV per x.
    LdSweep,
    /// Integrate the count-resolved master equation and write P(n,t).
    PnEvolve,
    /// Simulate click trajectories and write the click table plus summary.
    Trajectories,
}

fn run(cli: Cli) -> clickstat_core::Result<Vec<PathBuf>> {
    let mut cfg = RunConfig::from_path(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.analysis.seed = seed;
    }
    let out_dir = cli
        .out
        .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let go = || match cli.command {
        Command::GammaEff => commands::cmd_gamma_eff(&cfg, &out_dir),
        Command::LdSweep => commands::cmd_ld_sweep(&cfg, &out_dir),
        Command::PnEvolve => commands::cmd_pn_evolve(&cfg, &out_dir),
        Command::Trajectories => commands::cmd_trajectories(&cfg, &out_dir),
    };

    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
