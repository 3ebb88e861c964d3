//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use cpc_routing::dynprog::Solution;
use cpc_routing::geometry::{HierarchyAssignment, StateHierarchy};
use cpc_routing::queueing::QueueParams;
use cpc_routing::rng::{rng, uniform, SimRng};
use cpc_routing::scenario::{
    build_state_model, BaselineConfig, GameConfig, Node, NodeSet, PrimaryUser, QueueDefaults,
    RadioConfig, Region,
};
use cpc_routing::{NodeId, Point, Scenario, StateModel};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load(name: &str) -> Scenario {
    Scenario::from_path(config_path(name)).expect("shipped config loads")
}

/// Mean sojourn time of a FIFO M/G/1 queue by the Lindley recursion, starting
/// empty.
pub fn simulate_mg1(
    lambda: f64,
    mut service: impl FnMut(&mut SimRng) -> f64,
    arrivals: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let mut wait = 0.0f64;
    let mut total = 0.0;
    for _ in 0..arrivals {
        let s = service(&mut r);
        total += wait + s;
        let gap = -(1.0 - uniform(&mut r)).ln() / lambda;
        wait = (wait + s - gap).max(0.0);
    }
    total / arrivals as f64
}

/// `v ← r + βPv` until the update is far below the target accuracy.
pub fn value_iteration(r: &[f64], p: &[Vec<f64>], beta: f64) -> Vec<f64> {
    let n = r.len();
    let mut v = r.to_vec();
    loop {
        let next: Vec<f64> = (0..n)
            .map(|i| r[i] + beta * (0..n).map(|j| p[i][j] * v[j]).sum::<f64>())
            .collect();
        let diff = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if diff <= 1e-13 * (1.0 - beta) * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
            return v;
        }
    }
}

/// `‖v − r − βPv‖∞`.
pub fn bellman_residual(v: &[f64], r: &[f64], p: &[Vec<f64>], beta: f64) -> f64 {
    (0..v.len())
        .map(|i| {
            let pv: f64 = (0..v.len()).map(|j| p[i][j] * v[j]).sum();
            (v[i] - r[i] - beta * pv).abs()
        })
        .fold(0.0, f64::max)
}

pub fn random_stochastic(n: usize, r: &mut SimRng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            // sparse rows now and then
            let row: Vec<f64> = (0..n)
                .map(|_| if uniform(r) < 0.2 { 0.0 } else { uniform(r) })
                .collect();
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter().map(|x| x / sum).collect()
            } else {
                let mut e = vec![0.0; n];
                e[(uniform(r) * n as f64) as usize] = 1.0;
                e
            }
        })
        .collect()
}

pub fn between(r: &mut SimRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(r)
}

pub fn pick(r: &mut SimRng, lo: usize, hi: usize) -> usize {
    lo + ((hi - lo + 1) as f64 * uniform(r)) as usize
}

/// Scenario shell with explicit nodes and default settings elsewhere.
pub fn bare_scenario(pus: Vec<PrimaryUser>, nodes: NodeSet, game: GameConfig) -> Scenario {
    Scenario {
        seed: 1,
        region: Region {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        },
        pus,
        nodes,
        queueing: QueueDefaults::default(),
        radio: RadioConfig::default(),
        game,
        baselines: BaselineConfig::default(),
        deployment: None,
    }
}

pub fn single_state_model() -> StateModel {
    StateModel {
        dims: vec![1],
        occupied: vec![0],
        labels: vec![vec!["occupied".into()]],
        transition: vec![vec![1.0]],
        stationary: vec![1.0],
    }
}

/// A layered game instance with an explicit hierarchy.
pub struct Instance {
    pub scenario: Scenario,
    pub hierarchy: HierarchyAssignment,
    pub model: StateModel,
}

/// Random instance with at most `max_levels` levels, `max_players` nodes per
/// level, `max_actions` candidates per node and `max_states` PU states.
pub fn random_instance(
    seed: u64,
    max_levels: usize,
    max_players: usize,
    max_actions: usize,
    max_states: usize,
) -> Instance {
    let mut r = rng(seed);
    let l_count = pick(&mut r, 1, max_levels);
    let n_states = if max_states >= 2 && uniform(&mut r) < 0.7 { 2 } else { 1 };
    let sizes: Vec<usize> = (0..l_count).map(|_| pick(&mut r, 1, max_players)).collect();
    let n_cpc = pick(&mut r, 1, max_actions.min(3));

    let mut next_id = 1u32;
    let mut levels: Vec<Vec<NodeId>> = Vec::new();
    for &m in &sizes {
        levels.push((0..m).map(|k| NodeId(next_id + k as u32)).collect());
        next_id += m as u32;
    }
    let cpcs: Vec<NodeId> = (0..n_cpc).map(|k| NodeId(next_id + k as u32)).collect();

    let queue = |r: &mut SimRng, arrival: (f64, f64)| {
        let mean = between(r, 0.05, 0.25);
        let scv = between(r, 0.0, 2.0);
        QueueParams::new(between(r, arrival.0, arrival.1), mean, mean * mean * (1.0 + scv))
    };
    let node = |id: NodeId, q: QueueParams| Node {
        id,
        pos: Point::new(0.0, 0.0),
        queue: Some(q),
    };
    let mut nodes = NodeSet::default();
    for (l, ids) in levels.iter().enumerate() {
        for &id in ids {
            if l == 0 {
                nodes.sources.push(node(id, queue(&mut r, (0.3, 1.5))));
            } else {
                nodes.relays.push(node(id, queue(&mut r, (0.0, 0.5))));
            }
        }
    }
    for &id in &cpcs {
        nodes.cpc_stations.push(node(id, queue(&mut r, (0.0, 0.5))));
    }

    let states = (0..n_states)
        .map(|s| {
            let mut candidates = BTreeMap::new();
            for l in 0..l_count {
                for &id in &levels[l] {
                    let cands = if l + 1 == l_count {
                        cpcs.clone()
                    } else {
                        let pool = &levels[l + 1];
                        let mut c: Vec<NodeId> =
                            pool.iter().copied().filter(|_| uniform(&mut r) < 0.6).collect();
                        if c.is_empty() {
                            c.push(pool[(uniform(&mut r) * pool.len() as f64) as usize]);
                        }
                        c.truncate(max_actions);
                        c
                    };
                    candidates.insert(id, cands);
                }
            }
            let level_of = levels
                .iter()
                .enumerate()
                .flat_map(|(l, ids)| ids.iter().map(move |&id| (id, l + 1)))
                .collect();
            StateHierarchy {
                state: s,
                levels: levels.clone(),
                level_of,
                candidates,
                blocked: Vec::new(),
                dropped_sources: Vec::new(),
            }
        })
        .collect();
    let band_of = levels
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(l, ids)| ids.iter().map(move |&id| (id, l + 1)))
        .collect();
    let hierarchy = HierarchyAssignment {
        level_count: l_count,
        cpcs,
        band_of,
        states,
    };

    let pu = PrimaryUser::two_state(
        1,
        Point::new(0.5, 0.5),
        0.1,
        between(&mut r, 0.05, 0.95),
        between(&mut r, 0.05, 0.95),
    );
    let model = if n_states == 2 {
        build_state_model(std::slice::from_ref(&pu)).expect("irreducible chain")
    } else {
        single_state_model()
    };
    let game = GameConfig {
        beta: between(&mut r, 0.3, 0.95),
        ..GameConfig::default()
    };
    Instance {
        scenario: bare_scenario(vec![pu], nodes, game),
        hierarchy,
        model,
    }
}

/// P-K sojourn time saturated at `cap`, written out independently.
pub fn pk_oracle(q: &QueueParams, lambda: f64, cap: f64) -> f64 {
    let rho = lambda * q.mean_service;
    if rho >= 1.0 {
        return cap;
    }
    (lambda * q.second_moment_service / (2.0 * (1.0 - rho)) + q.mean_service).min(cap)
}

/// Expected hop delay of `node` choosing `target` at `state`, enumerating the
/// pure choices of every other node at its level.
pub fn enumerated_hop_delay(
    inst: &Instance,
    sol: &Solution,
    state: usize,
    node: NodeId,
    target: NodeId,
) -> f64 {
    let h = &inst.hierarchy.states[state];
    let level = h.level_of[&node];
    let index = inst.scenario.index();
    let cap = inst.scenario.game.delay_cap;
    let others: Vec<NodeId> = h.levels[level - 1].iter().copied().filter(|&j| j != node).collect();
    let entries: Vec<_> = others
        .iter()
        .map(|&j| sol.strategies.get(j, state).expect("strategy of every player"))
        .collect();
    let rate = |n: NodeId| sol.rates[&n][state];
    let q = index.queue(target);
    let mut total = 0.0;
    let mut digits = vec![0usize; others.len()];
    loop {
        let mut prob = 1.0;
        let mut load = q.arrival_rate + rate(node);
        for (k, e) in entries.iter().enumerate() {
            prob *= e.strategy.probs[digits[k]];
            if e.candidates[digits[k]] == target {
                load += rate(others[k]);
            }
        }
        total += prob * pk_oracle(q, load, cap);
        let mut k = others.len();
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < entries[k].candidates.len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Expected delay from `node` to a CPC at `state` under the solved strategies,
/// recomputed from the problem data. CPCs have zero remaining delay.
pub fn path_delay(inst: &Instance, sol: &Solution, state: usize, node: NodeId) -> f64 {
    if inst.hierarchy.cpcs.contains(&node) {
        return 0.0;
    }
    let e = sol.strategies.get(node, state).expect("strategy");
    e.candidates
        .iter()
        .zip(&e.strategy.probs)
        .map(|(&c, &p)| p * (enumerated_hop_delay(inst, sol, state, node, c) + path_delay(inst, sol, state, c)))
        .sum()
}

/// Worst relative improvement any node gets from a pure stationary deviation
/// (one next hop per state), with discounted values over the PU chain. The
/// scale of each node is the largest magnitude of its equilibrium value.
pub fn worst_deviation_gain(inst: &Instance, sol: &Solution) -> f64 {
    let n_states = inst.model.num_states();
    let beta = inst.scenario.game.beta;
    let p = &inst.model.transition;
    let mut worst: f64 = 0.0;
    let nodes: Vec<NodeId> = inst.hierarchy.states[0].admitted().collect();
    for node in nodes {
        let eq: Vec<f64> = (0..n_states).map(|s| path_delay(inst, sol, s, node)).collect();
        let v_eq = value_iteration(&eq, p, beta);
        // deviation cost of each action at each state
        let dev: Vec<Vec<f64>> = (0..n_states)
            .map(|s| {
                inst.hierarchy.states[s]
                    .candidates_of(node)
                    .iter()
                    .map(|&c| {
                        enumerated_hop_delay(inst, sol, s, node, c) + path_delay(inst, sol, s, c)
                    })
                    .collect()
            })
            .collect();
        let scale = v_eq.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut digits = vec![0usize; n_states];
        loop {
            let c: Vec<f64> = (0..n_states).map(|s| dev[s][digits[s]]).collect();
            let v_dev = value_iteration(&c, p, beta);
            for s in 0..n_states {
                let gain = v_eq[s] - v_dev[s];
                worst = worst.max(if scale > 0.0 { gain / scale } else { gain });
            }
            let mut k = n_states;
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < dev[k].len() {
                    break false;
                }
                digits[k] = 0;
            };
            if done {
                break;
            }
        }
    }
    worst
}
