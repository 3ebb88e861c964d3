//! Experiment driver: the global procedure (axis, corridor, levels), the
//! local procedure (backward induction with fictitious play) and artifact
//! emission with a manifest.

mod output;

use std::path::{Path, PathBuf};

pub use output::Artifacts;

use crate::dynprog::{backward_induction, stage_game_of, Solution};
use crate::geometry::HierarchyOptions;
use crate::metrics::{compare_deployment, ensemble_compare, Algorithm, Comparison};
use crate::network::Network;
use crate::rng::{categorical, derive, rng};
use crate::scenario::PrimaryUser;
use crate::stagegame::{fictitious_play, FpOptions};
use crate::{Error, NodeId, Result, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    /// Solve the routing game; write strategies, values, FP audit and axis.
    Solve,
    /// Route every source of one deployment with all three algorithms.
    Route,
    /// Seeded comparison of the algorithms over many deployments.
    Compare,
    /// Per-iteration FP frequencies of one stage game.
    TraceFp {
        node: Option<NodeId>,
        level: usize,
        state: Option<usize>,
    },
    /// Comparison summary over a grid of ω, β and relay counts.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Route => "route",
            Command::Compare => "compare",
            Command::TraceFp { .. } => "trace-fp",
            Command::Sweep => "sweep",
        }
    }
}

/// Parameter grid of the `sweep` command. Empty lists keep the scenario's
/// value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRanges {
    pub omega: Vec<f64>,
    pub beta: Vec<f64>,
    pub n_relays: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub config: PathBuf,
    pub command: Command,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Deployments in `compare` and `sweep`.
    pub seeds: usize,
    pub omega: Option<f64>,
    pub beta: Option<f64>,
    /// Worker threads; all artifacts are independent of this.
    pub threads: Option<usize>,
    pub sweep: SweepRanges,
}

impl ExperimentSpec {
    pub fn new(config: impl Into<PathBuf>, command: Command, out: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            config: config.into(),
            command,
            out: out.into(),
            seed: None,
            seeds: 20,
            omega: None,
            beta: None,
            threads: None,
            sweep: SweepRanges::default(),
        }
    }

    /// The scenario with command-line overrides applied and revalidated.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(o) = self.omega {
            s.game.omega = o;
        }
        if let Some(b) = self.beta {
            s.game.beta = b;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// One-line summary for the terminal.
    pub summary: String,
}

/// Runs one experiment and writes its artifacts and `manifest.txt` into the
/// output directory.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    let scenario = spec.scenario()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = spec.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Other(format!("thread pool: {e}")))?;
    let (artifacts, summary) = pool.install(|| execute(spec, &scenario))?;
    let header = [
        ("command", spec.command.name().to_string()),
        ("config", spec.config.display().to_string()),
        ("config_hash", scenario.content_hash()),
        ("seed", scenario.seed.to_string()),
        ("seeds", spec.seeds.to_string()),
        ("crate", format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))),
    ];
    let files = artifacts.write(&spec.out, &header)?;
    Ok(RunReport { files, summary })
}

/// Computes a command's artifacts without touching the file system.
pub fn execute(spec: &ExperimentSpec, scenario: &Scenario) -> Result<(Artifacts, String)> {
    let mut art = Artifacts::default();
    let summary = match &spec.command {
        Command::Solve => {
            let (net, sol) = solve(scenario)?;
            write_solution(&mut art, &net, &sol)?;
            format!(
                "{} levels, {} states, {} strategies, {} unresolved stage games",
                sol.level_count,
                net.model.num_states(),
                sol.strategies.len(),
                sol.unresolved().count()
            )
        }
        Command::Route => {
            let (samples, dropped) = compare_deployment(scenario, &Algorithm::ALL, scenario.seed)?;
            art.add_csv("routes.csv", &["seed", "algorithm", "hop_index", "x", "y"], output::route_rows(&samples))?;
            format!("{} routes, {} sources dropped", samples.len(), dropped)
        }
        Command::Compare => {
            let cmp = ensemble_compare(scenario, &Algorithm::ALL, spec.seeds)?;
            write_comparison(&mut art, &cmp)?;
            format!(
                "{} route samples over {} seeds, {} sources dropped",
                cmp.samples.len(),
                spec.seeds,
                cmp.dropped
            )
        }
        Command::TraceFp { node, level, state } => {
            let (net, sol) = solve(scenario)?;
            let state = match state {
                Some(s) => *s,
                None => sample_state(&net, scenario.seed),
            };
            let game = stage_game_of(&net.scenario, &net.hierarchy, &sol, state, *level)?;
            if let Some(n) = node {
                if game.player_index(*n).is_none() {
                    return Err(Error::Validation(format!(
                        "node {n} is not a player of level {level} at state {state}"
                    )));
                }
            }
            let opts = FpOptions {
                record: true,
                ..FpOptions::from_config(&scenario.game)
            };
            let (_, trace) = fictitious_play(&game, &opts);
            art.add_csv(
                "fp_trace.csv",
                &["iteration", "player", "action", "empirical_frequency"],
                output::trace_rows(&trace, &game.players, &game.actions, *node),
            )?;
            format!(
                "level {level} state {state}: {} iterations, converged {}",
                trace.iterations, trace.converged
            )
        }
        Command::Sweep => {
            let rows = sweep(scenario, &spec.sweep, spec.seeds)?;
            let n = rows.len();
            art.add_csv(
                "sweep.csv",
                &["omega", "beta", "n_relays", "algorithm", "mean_interference", "mean_delay", "routes"],
                rows,
            )?;
            format!("{n} sweep rows")
        }
    };
    Ok((art, summary))
}

/// Global and local procedure on the scenario's own deployment.
pub fn solve(scenario: &Scenario) -> Result<(Network, Solution)> {
    let realized = scenario.realize(scenario.seed)?;
    let net = Network::prepare(&realized, HierarchyOptions::default())?;
    let sol = backward_induction(&net.scenario, &net.hierarchy, &net.model)?;
    Ok((net, sol))
}

/// State drawn from the stationary distribution with a seed-derived stream.
pub fn sample_state(net: &Network, seed: u64) -> usize {
    categorical(&mut rng(derive(seed, "state", 0)), &net.model.stationary)
}

fn write_solution(art: &mut Artifacts, net: &Network, sol: &Solution) -> Result<()> {
    art.add_csv("strategies.csv", &["node", "state", "action", "probability"], output::strategy_rows(sol))?;
    art.add_csv("values.csv", &["node", "state", "value"], output::value_rows(sol))?;
    art.add_csv(
        "fp_audit.csv",
        &["state", "level", "players", "iterations", "converged", "relative_gap"],
        output::audit_rows(&sol.audit),
    )?;
    art.add_csv("axis.csv", &["x", "y", "level"], output::axis_rows(&net.axis, sol.level_count))?;
    Ok(())
}

fn write_comparison(art: &mut Artifacts, cmp: &Comparison) -> Result<()> {
    let header = ["algorithm", "bin_center_km", "normalized_mean", "n"];
    art.add_csv("interference.csv", &header, output::report_rows(&cmp.interference))?;
    art.add_csv("delay.csv", &header, output::report_rows(&cmp.delay))?;
    art.add_csv("routes.csv", &["seed", "algorithm", "hop_index", "x", "y"], output::route_rows(&cmp.samples))?;
    Ok(())
}

fn sweep(scenario: &Scenario, ranges: &SweepRanges, seeds: usize) -> Result<Vec<Vec<String>>> {
    let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let omegas = or(&ranges.omega, scenario.game.omega);
    let betas = or(&ranges.beta, scenario.game.beta);
    let default_relays = scenario
        .deployment
        .as_ref()
        .map_or(scenario.nodes.relays.len(), |d| d.n_relays);
    let relays = if ranges.n_relays.is_empty() {
        vec![default_relays]
    } else {
        ranges.n_relays.clone()
    };
    let mut rows = Vec::new();
    for &omega in &omegas {
        for &beta in &betas {
            for &n in &relays {
                let mut s = scenario.clone();
                s.game.omega = omega;
                s.game.beta = beta;
                if let Some(d) = s.deployment.as_mut() {
                    d.n_relays = n;
                }
                s.validate()?;
                let cmp = ensemble_compare(&s, &Algorithm::ALL, seeds)?;
                for alg in Algorithm::ALL {
                    let mine: Vec<_> = cmp.samples.iter().filter(|x| x.algorithm == alg).collect();
                    let k = mine.len().max(1) as f64;
                    rows.push(vec![
                        omega.to_string(),
                        beta.to_string(),
                        n.to_string(),
                        alg.name().to_string(),
                        (mine.iter().map(|x| x.interference).sum::<f64>() / k).to_string(),
                        (mine.iter().map(|x| x.delay).sum::<f64>() / k).to_string(),
                        mine.len().to_string(),
                    ]);
                }
            }
        }
    }
    Ok(rows)
}

/// Returns the scenario with PUs replaced (matched by id) or added.
pub fn update_map(scenario: &Scenario, new_pus: &[PrimaryUser]) -> Result<Scenario> {
    let mut out = scenario.clone();
    for pu in new_pus {
        match out.pus.iter_mut().find(|p| p.id == pu.id) {
            Some(slot) => *slot = pu.clone(),
            None => out.pus.push(pu.clone()),
        }
    }
    out.validate()?;
    Ok(out)
}

/// A scenario with lazily recomputed global structure and solution. Map
/// updates that change the scenario mark both stale.
#[derive(Debug)]
pub struct Session {
    scenario: Scenario,
    cached: Option<(Network, Solution)>,
}

impl Session {
    pub fn new(scenario: Scenario) -> Self {
        Session {
            scenario,
            cached: None,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn is_stale(&self) -> bool {
        self.cached.is_none()
    }

    /// Applies new PU information; returns whether anything changed.
    pub fn update_map(&mut self, new_pus: &[PrimaryUser]) -> Result<bool> {
        let next = update_map(&self.scenario, new_pus)?;
        let changed = next.content_hash() != self.scenario.content_hash();
        if changed {
            self.scenario = next;
            self.cached = None;
        }
        Ok(changed)
    }

    pub fn solve(&mut self) -> Result<(&Network, &Solution)> {
        if self.cached.is_none() {
            self.cached = Some(solve(&self.scenario)?);
        }
        let (n, s) = self.cached.as_ref().expect("just solved");
        Ok((n, s))
    }
}

/// Reads a manifest's `[files]` section as `(sha256, name)` pairs.
pub fn read_manifest(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(text
        .lines()
        .skip_while(|l| *l != "[files]")
        .skip(1)
        .filter_map(|l| l.split_once("  "))
        .map(|(h, n)| (h.to_string(), n.to_string()))
        .collect())
}
