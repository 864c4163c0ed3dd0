use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seqate::commands;
use seqate::config::{Overrides, RunConfig};
use seqate::selfcheck::{self, Mutation};
use seqate::{CliError, CliResult};

/// Anytime-valid inference for the average treatment effect in adaptive experiments.
#[derive(Debug, Parser)]
#[command(name = "seqate", version)]
struct Cli {
    /// Suppress the summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of clt,hedged,prpi,asymp.
    #[arg(long)]
    methods: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Monte Carlo replications and write trajectory and aggregate CSVs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `experiment.n_iters`.
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Replay a logged stream (t,x..,a,y,pi1,k) and write per-step intervals.
    Infer {
        /// Stream CSV.
        stream: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Output trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        /// Replication index that selects the fold-allocation stream.
        #[arg(long, default_value_t = 0)]
        iter: u64,
    },
    /// Reduce trajectory CSVs into an aggregate CSV.
    Aggregate {
        /// Glob matching trajectory files.
        trajectories: String,
        #[arg(long)]
        out: PathBuf,
        /// First time at which errors are counted.
        #[arg(long, default_value_t = seqate_core::confseq::DEFAULT_T_MIN)]
        t_min: usize,
    },
    /// Run the fast invariant suite.
    Selfcheck {
        #[arg(long, hide = true)]
        mutate: Option<Mutation>,
    },
}

fn load(common: &Common, iters: Option<usize>) -> CliResult<RunConfig> {
    let o = Overrides { seed: common.seed, iters, methods: common.methods.clone() };
    RunConfig::load(&common.config, &o)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { common, out, iters } => {
            let cfg = load(&common, iters)?;
            let report = commands::simulate(&cfg, &out)?;
            if !cli.quiet {
                print!("{}", commands::summary_table(&report));
            }
        }
        Command::Infer { stream, common, out, iter } => {
            let cfg = load(&common, None)?;
            let n = commands::infer(&cfg, &stream, &out, iter)?;
            if !cli.quiet {
                println!("replayed {n} rows into {}", out.display());
            }
        }
        Command::Aggregate { trajectories, out, t_min } => {
            let agg = commands::aggregate(&trajectories, &out, t_min)?;
            if !cli.quiet {
                println!("aggregated {} replications into {}", agg.n_iters, out.display());
            }
        }
        Command::Selfcheck { mutate } => {
            let results = selfcheck::run(mutate);
            for r in &results {
                if !cli.quiet || !r.passed {
                    println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                }
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Selfcheck(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seqate: {e}");
            e.exit_code()
        }
    }
}
