//! Interference and delay of realized routes, and the seeded comparison of
//! game routing against the baselines as a function of source-to-CPC
//! distance.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::baselines::{dijkstra_route, MaRouter, WeightedGraph};
use crate::dynprog::{backward_induction, realize_route, RoutePath};
use crate::geometry::HierarchyOptions;
use crate::network::Network;
use crate::queueing::pk_delay_capped;
use crate::rng::{categorical, derive, rng};
use crate::scenario::{NodeIndex, Point, PrimaryUser, RadioConfig, Scenario, StateModel};
use crate::{NodeId, Result};

/// Number of distance bins in comparison reports.
pub const DISTANCE_BINS: usize = 10;

/// Received SU power at each PU from a route's transmissions.
///
/// Hop `h` transmits from `nodes[h]` at state `states[h]`. It counts toward
/// PU `k` when `k` is occupied at that state and the transmitter lies within
/// `footprint_radius + interference_range` of the PU center, contributing
/// `tx_power · max(d, d_min)^-α`. A route without recorded states counts
/// every hop for every PU.
pub fn route_interference(
    route: &RoutePath,
    index: &NodeIndex,
    pus: &[PrimaryUser],
    model: &StateModel,
    radio: &RadioConfig,
    d_min: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; pus.len()];
    for h in 0..route.hops() {
        let tx = index.pos(route.nodes[h]);
        let state = route.states.get(h).copied();
        for (k, pu) in pus.iter().enumerate() {
            if state.is_some_and(|s| !model.is_occupied(s, k)) {
                continue;
            }
            let d = pu.center.dist(&tx);
            if d <= pu.footprint_radius + radio.interference_range {
                out[k] += radio.tx_power * d.max(d_min).powf(-radio.path_loss_alpha);
            }
        }
    }
    out
}

/// Arrival rate at every node when the given routes carry their sources'
/// traffic on top of each node's external arrivals.
pub fn realized_loads(index: &NodeIndex, routes: &[RoutePath]) -> BTreeMap<NodeId, f64> {
    let mut loads: BTreeMap<NodeId, f64> = BTreeMap::new();
    for route in routes {
        let rate = index.queue(route.source()).arrival_rate;
        for &n in &route.nodes[1..] {
            *loads
                .entry(n)
                .or_insert_with(|| index.queue(n).arrival_rate) += rate;
        }
    }
    loads
}

/// End-to-end expected delay: the sum of M/G/1 delays at every receiving
/// node under `loads`.
pub fn route_delay(
    route: &RoutePath,
    index: &NodeIndex,
    loads: &BTreeMap<NodeId, f64>,
    delay_cap: f64,
) -> f64 {
    route.nodes[1..]
        .iter()
        .map(|&n| {
            let q = index.queue(n);
            let load = loads.get(&n).copied().unwrap_or(q.arrival_rate);
            pk_delay_capped(&q.with_arrival(load), delay_cap)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Game,
    Dijkstra,
    Ma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Game, Algorithm::Dijkstra, Algorithm::Ma];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Game => "game",
            Algorithm::Dijkstra => "dijkstra",
            Algorithm::Ma => "ma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One source routed by one algorithm in one seeded deployment.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteSample {
    pub seed: u64,
    pub state: usize,
    pub source: NodeId,
    pub algorithm: Algorithm,
    /// Straight-line distance from the source to its nearest CPC (km).
    pub distance: f64,
    pub path: Vec<Point>,
    /// Interference summed over PUs (W).
    pub interference: f64,
    pub delay: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinStat {
    pub center: f64,
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

/// Normalized metric of one algorithm per distance bin.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub algorithm: Algorithm,
    pub bins: Vec<BinStat>,
}

pub type InterferenceReport = Vec<MetricReport>;
pub type DelayReport = Vec<MetricReport>;

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub samples: Vec<RouteSample>,
    pub interference: InterferenceReport,
    pub delay: DelayReport,
    /// Sources left out because some algorithm could not route them.
    pub dropped: usize,
    /// Deployments in which the pipeline failed outright.
    pub failed_seeds: Vec<u64>,
}

impl Comparison {
    pub fn report(&self, metric: Metric) -> &[MetricReport] {
        match metric {
            Metric::Interference => &self.interference,
            Metric::Delay => &self.delay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Interference,
    Delay,
}

/// Deployment seed `k` of a comparison run.
pub fn deployment_seed(base: u64, k: usize) -> u64 {
    derive(base, "deployment", k as u64)
}

struct SeedResult {
    samples: Vec<RouteSample>,
    dropped: usize,
    failed: bool,
}

/// Routes every source of one deployment with each algorithm at one state
/// drawn from the stationary distribution. Sources that any algorithm fails
/// to route are dropped for all of them.
pub fn compare_deployment(
    scenario: &Scenario,
    algorithms: &[Algorithm],
    seed: u64,
) -> Result<(Vec<RouteSample>, usize)> {
    let realized = scenario.realize(seed)?;
    let net = Network::prepare(
        &realized,
        HierarchyOptions {
            drop_unreachable_sources: true,
        },
    )?;
    let sc = &net.scenario;
    let index = sc.index();
    let state = categorical(&mut rng(derive(seed, "state", 0)), &net.model.stationary);
    let cpcs = sc.cpc_ids();

    let solution = if algorithms.contains(&Algorithm::Game) {
        Some(backward_induction(sc, &net.hierarchy, &net.model)?)
    } else {
        None
    };
    let graph = WeightedGraph::from_scenario(sc)?;
    let ma = MaRouter::new(sc, &net.axis);

    let mut per_source: Vec<(NodeId, Vec<RoutePath>)> = Vec::new();
    let mut dropped = 0;
    for src in sc.source_ids() {
        let routes: Option<Vec<RoutePath>> = algorithms
            .iter()
            .map(|alg| match alg {
                Algorithm::Game => solution
                    .as_ref()
                    .and_then(|sol| realize_route(sol, state, src, derive(seed, "route", u64::from(src.0))).ok()),
                Algorithm::Dijkstra => dijkstra_route(&graph, src, &cpcs).ok().map(|r| r.at_state(state)),
                Algorithm::Ma => ma
                    .as_ref()
                    .ok()
                    .and_then(|m| m.route(src, index.pos(src)).ok())
                    .map(|r| r.at_state(state)),
            })
            .collect();
        match routes {
            Some(r) => per_source.push((src, r)),
            None => dropped += 1,
        }
    }

    let mut samples = Vec::new();
    for (a, &alg) in algorithms.iter().enumerate() {
        let routes: Vec<RoutePath> = per_source.iter().map(|(_, r)| r[a].clone()).collect();
        let loads = realized_loads(&index, &routes);
        for route in &routes {
            let src_pos = index.pos(route.source());
            let distance = cpcs
                .iter()
                .map(|&c| index.pos(c).dist(&src_pos))
                .fold(f64::INFINITY, f64::min);
            let interference = route_interference(
                route,
                &index,
                &sc.pus,
                &net.model,
                &sc.radio,
                sc.game.grid_resolution,
            )
            .iter()
            .sum();
            samples.push(RouteSample {
                seed,
                state,
                source: route.source(),
                algorithm: alg,
                distance,
                path: route.nodes.iter().map(|&n| index.pos(n)).collect(),
                interference,
                delay: route_delay(route, &index, &loads, sc.game.delay_cap),
            });
        }
    }
    Ok((samples, dropped))
}

/// Compares the algorithms over `n_seeds` seeded deployments.
///
/// Deployments run in parallel and merge in seed order. Metrics are
/// normalized by their maximum over all samples of all algorithms and
/// summarized in equal-width bins over the observed source-to-CPC distances.
pub fn ensemble_compare(
    scenario: &Scenario,
    algorithms: &[Algorithm],
    n_seeds: usize,
) -> Result<Comparison> {
    let results: Vec<(u64, SeedResult)> = (0..n_seeds)
        .into_par_iter()
        .map(|k| {
            let seed = deployment_seed(scenario.seed, k);
            let res = match compare_deployment(scenario, algorithms, seed) {
                Ok((samples, dropped)) => SeedResult {
                    samples,
                    dropped,
                    failed: false,
                },
                Err(_) => SeedResult {
                    samples: Vec::new(),
                    dropped: 0,
                    failed: true,
                },
            };
            (seed, res)
        })
        .collect();
    let mut samples = Vec::new();
    let mut dropped = 0;
    let mut failed_seeds = Vec::new();
    for (seed, r) in results {
        if r.failed {
            failed_seeds.push(seed);
        }
        dropped += r.dropped;
        samples.extend(r.samples);
    }
    let interference = summarize(&samples, algorithms, |s| s.interference);
    let delay = summarize(&samples, algorithms, |s| s.delay);
    Ok(Comparison {
        samples,
        interference,
        delay,
        dropped,
        failed_seeds,
    })
}

/// Divides by the maximum (all zeros stay zero).
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; values.len()]
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Equal-width bin edges `(lo, width)` over the observed distances.
pub fn bin_layout(distances: &[f64]) -> (f64, f64) {
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let width = if hi > lo { (hi - lo) / DISTANCE_BINS as f64 } else { 1.0 };
    (lo, width)
}

fn bin_of(d: f64, lo: f64, width: f64) -> usize {
    (((d - lo) / width).floor().max(0.0) as usize).min(DISTANCE_BINS - 1)
}

fn summarize(
    samples: &[RouteSample],
    algorithms: &[Algorithm],
    metric: impl Fn(&RouteSample) -> f64,
) -> Vec<MetricReport> {
    let raw: Vec<f64> = samples.iter().map(&metric).collect();
    let norm = normalize(&raw);
    let distances: Vec<f64> = samples.iter().map(|s| s.distance).collect();
    let (lo, width) = bin_layout(&distances);
    algorithms
        .iter()
        .map(|&alg| {
            let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); DISTANCE_BINS];
            for (s, &v) in samples.iter().zip(&norm) {
                if s.algorithm == alg {
                    per_bin[bin_of(s.distance, lo, width)].push(v);
                }
            }
            let bins = per_bin
                .into_iter()
                .enumerate()
                .map(|(b, mut vals)| {
                    let n = vals.len();
                    let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
                    BinStat {
                        center: lo + (b as f64 + 0.5) * width,
                        mean,
                        median: median(&mut vals),
                        n,
                    }
                })
                .collect();
            MetricReport { algorithm: alg, bins }
        })
        .collect()
}

/// Bins in which `a`'s median is at most `b`'s. Bins empty for either
/// algorithm do not count.
pub fn bins_at_most(report: &[MetricReport], a: Algorithm, b: Algorithm) -> usize {
    let get = |alg| report.iter().find(|r| r.algorithm == alg);
    match (get(a), get(b)) {
        (Some(ra), Some(rb)) => ra
            .bins
            .iter()
            .zip(&rb.bins)
            .filter(|(x, y)| x.n > 0 && y.n > 0 && x.median <= y.median)
            .count(),
        _ => 0,
    }
}
