use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cpc_routing::runner::{run, Command, ExperimentSpec, SweepRanges};
use cpc_routing::NodeId;

#[derive(Parser)]
#[command(name = "cpcroute", version, about = "Interference-aware routing game for cognitive radio networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Corridor relaxation factor in (0, 1].
    #[arg(long)]
    omega: Option<f64>,
    /// Discount factor in (0, 1).
    #[arg(long)]
    beta: Option<f64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the routing game and write strategies and values.
    Solve(Common),
    /// Route every source of one deployment with each algorithm.
    Route(Common),
    /// Compare game, Dijkstra and medial-axis routing over seeded deployments.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// Dump fictitious-play frequencies of one stage game.
    TraceFp {
        #[command(flatten)]
        common: Common,
        /// Only this player's frequencies.
        #[arg(long)]
        node: Option<u32>,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// PU state index; sampled from the stationary law when absent.
        #[arg(long)]
        state: Option<usize>,
    },
    /// Comparison summary over parameter grids.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long = "omegas", value_delimiter = ',')]
        omegas: Vec<f64>,
        #[arg(long = "betas", value_delimiter = ',')]
        betas: Vec<f64>,
        #[arg(long = "relays", value_delimiter = ',')]
        relays: Vec<usize>,
    },
}

fn spec(common: Common, command: Command) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(common.config, command, common.out);
    s.seed = common.seed;
    s.omega = common.omega;
    s.beta = common.beta;
    s.threads = common.threads;
    s
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let spec = match cli.command {
        Cmd::Solve(c) => spec(c, Command::Solve),
        Cmd::Route(c) => spec(c, Command::Route),
        Cmd::Compare { common, seeds } => {
            let mut s = spec(common, Command::Compare);
            s.seeds = seeds;
            s
        }
        Cmd::TraceFp { common, node, level, state } => spec(
            common,
            Command::TraceFp {
                node: node.map(NodeId),
                level,
                state,
            },
        ),
        Cmd::Sweep { common, seeds, omegas, betas, relays } => {
            let mut s = spec(common, Command::Sweep);
            s.seeds = seeds;
            s.sweep = SweepRanges {
                omega: omegas,
                beta: betas,
                n_relays: relays,
            };
            s
        }
    };
    let report = run(&spec).context("run failed")?;
    println!("{}", report.summary);
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
