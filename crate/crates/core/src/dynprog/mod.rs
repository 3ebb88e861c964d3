//! The multi-level stochastic game: discounted Markov values and backward
//! induction over hierarchy levels.
//!
//! For each level from the CPC side down to the sources and each PU state,
//! the stage game is solved by fictitious play. A node's stage value
//! `r_i(s)` is its expected cost at the equilibrium: the delay at its next
//! hop plus the next hop's own stage value at the same state. The discounted
//! value over the PU state process is `v_i = (I − βP)⁻¹ r_i`.

mod route;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use route::{realize_route, realize_route_with, RoutePath};

use crate::geometry::HierarchyAssignment;
use crate::scenario::{NodeIndex, Scenario, StateModel};
use crate::stagegame::{
    build_stage_game, equilibrium_value, fictitious_play, FpOptions, MixedStrategy, StageGame,
};
use crate::{Error, NodeId, Result};

const DIRECT_SOLVE_MAX: usize = 1024;
const VI_TOL: f64 = 1e-10;
const VI_MAX_ITERS: usize = 10_000_000;

/// Solves `(I − βP) v = r`.
///
/// Uses an LU factorization up to 1024 states and value iteration beyond.
/// `β = 0` returns `r` unchanged.
pub fn solve_markov_values(r: &[f64], p: &[Vec<f64>], beta: f64) -> Result<Vec<f64>> {
    let n = r.len();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    if let Some(row) = p.iter().find(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: row.len(),
        });
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Validation(format!("beta must lie in [0,1), got {beta}")));
    }
    if beta == 0.0 {
        return Ok(r.to_vec());
    }
    if n <= DIRECT_SOLVE_MAX {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - beta * p[i][j]
        });
        let v = a
            .lu()
            .solve(&DVector::from_column_slice(r))
            .ok_or_else(|| Error::Other("I - beta P is singular".into()))?;
        return Ok(v.iter().copied().collect());
    }
    let mut v = r.to_vec();
    for _ in 0..VI_MAX_ITERS {
        let next: Vec<f64> = (0..n)
            .map(|i| r[i] + beta * p[i].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let diff = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if diff < VI_TOL {
            return Ok(v);
        }
    }
    Err(Error::NotConverged {
        what: "value iteration",
        iterations: VI_MAX_ITERS,
    })
}

/// Mixed strategy of one node at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyEntry {
    pub level: usize,
    pub candidates: Vec<NodeId>,
    pub strategy: MixedStrategy,
    /// Expected queueing delay at each candidate under the equilibrium.
    pub stage_delays: Vec<f64>,
}

impl StrategyEntry {
    pub fn prob(&self, node: NodeId) -> f64 {
        self.candidates
            .iter()
            .position(|&c| c == node)
            .map_or(0.0, |a| self.strategy.probs[a])
    }

    /// Expected delay of this node's own hop.
    pub fn expected_stage_delay(&self) -> f64 {
        self.strategy
            .probs
            .iter()
            .zip(&self.stage_delays)
            .map(|(p, d)| p * d)
            .sum()
    }
}

/// Stationary behavioral strategies keyed by `(node, state)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrategyTable {
    entries: BTreeMap<(NodeId, usize), StrategyEntry>,
}

impl StrategyTable {
    pub fn get(&self, node: NodeId, state: usize) -> Option<&StrategyEntry> {
        self.entries.get(&(node, state))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, usize), &StrategyEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, node: NodeId, state: usize, entry: StrategyEntry) {
        self.entries.insert((node, state), entry);
    }
}

/// Stage values `r` and discounted values `v` per node over the state space.
/// Nodes not admitted at a state have stage value 0 there.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueTable {
    pub stage: BTreeMap<NodeId, Vec<f64>>,
    pub values: BTreeMap<NodeId, Vec<f64>>,
}

impl ValueTable {
    pub fn stage_value(&self, node: NodeId, state: usize) -> Option<f64> {
        self.stage.get(&node).map(|r| r[state])
    }

    pub fn value(&self, node: NodeId, state: usize) -> Option<f64> {
        self.values.get(&node).map(|v| v[state])
    }
}

/// Outcome of one stage game.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub state: usize,
    pub level: usize,
    pub players: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Largest unilateral gain relative to the payoff scale.
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub fp: FpOptions,
    /// Extra passes that re-solve with forwarded rates propagated under the
    /// previous pass's strategies.
    pub rate_refinements: usize,
}

impl SolveOptions {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        SolveOptions {
            fp: FpOptions::from_config(&scenario.game),
            rate_refinements: scenario.game.rate_refinements,
        }
    }
}

/// Forwarded rate of every admitted node per state (packets/s).
pub type RateTable = BTreeMap<NodeId, Vec<f64>>;

#[derive(Clone, Debug)]
pub struct Solution {
    pub strategies: StrategyTable,
    pub values: ValueTable,
    /// Rates the stage games were solved with.
    pub rates: RateTable,
    pub audit: Vec<AuditEntry>,
    pub level_count: usize,
    pub cpcs: Vec<NodeId>,
    pub beta: f64,
    pub transition: Vec<Vec<f64>>,
}

impl Solution {
    /// Stage games that stopped without meeting the FP stopping rule.
    pub fn unresolved(&self) -> impl Iterator<Item = &AuditEntry> {
        self.audit.iter().filter(|a| !a.converged)
    }

    /// Discounted value of a node's own hop delays alone, without the
    /// continuation through later levels.
    pub fn local_utility(&self, node: NodeId) -> Result<Vec<f64>> {
        let n = self.transition.len();
        let w: Vec<f64> = (0..n)
            .map(|s| {
                self.strategies
                    .get(node, s)
                    .map_or(0.0, StrategyEntry::expected_stage_delay)
            })
            .collect();
        solve_markov_values(&w, &self.transition, self.beta)
    }
}

/// Forwarded rates at every state when each node splits its traffic by
/// `split(node, state)` (aligned with its candidates). Sources forward their
/// own arrivals; a relay forwards its external arrivals plus everything it
/// receives.
pub fn propagate_rates(
    index: &NodeIndex,
    hierarchy: &HierarchyAssignment,
    split: impl Fn(NodeId, usize) -> Vec<f64>,
) -> RateTable {
    let n_states = hierarchy.states.len();
    let mut rates: RateTable = BTreeMap::new();
    for (s, h) in hierarchy.states.iter().enumerate() {
        let mut inflow: BTreeMap<NodeId, f64> = BTreeMap::new();
        for (l, level) in h.levels.iter().enumerate() {
            for &node in level {
                let rate = index.queue(node).arrival_rate
                    + inflow.get(&node).copied().unwrap_or(0.0);
                rates.entry(node).or_insert_with(|| vec![0.0; n_states])[s] = rate;
                if l + 1 < h.levels.len() {
                    for (c, p) in h.candidates_of(node).iter().zip(split(node, s)) {
                        *inflow.entry(*c).or_insert(0.0) += p * rate;
                    }
                }
            }
        }
    }
    rates
}

fn uniform_split(hierarchy: &HierarchyAssignment) -> impl Fn(NodeId, usize) -> Vec<f64> + '_ {
    move |node, s| {
        let k = hierarchy.states[s].candidates_of(node).len();
        vec![1.0 / k as f64; k]
    }
}

/// Solves the routing game with the scenario's settings.
pub fn backward_induction(
    scenario: &Scenario,
    hierarchy: &HierarchyAssignment,
    model: &StateModel,
) -> Result<Solution> {
    backward_induction_with(scenario, hierarchy, model, &SolveOptions::from_scenario(scenario))
}

/// Backward induction with explicit options.
///
/// Forwarded rates start from uniform splitting; each refinement re-solves
/// with rates propagated under the previous strategies.
pub fn backward_induction_with(
    scenario: &Scenario,
    hierarchy: &HierarchyAssignment,
    model: &StateModel,
    opts: &SolveOptions,
) -> Result<Solution> {
    if hierarchy.states.len() != model.num_states() {
        return Err(Error::DimensionMismatch {
            expected: model.num_states(),
            got: hierarchy.states.len(),
        });
    }
    let index = scenario.index();
    let rates = propagate_rates(&index, hierarchy, uniform_split(hierarchy));
    let mut solution = solve_with_rates(scenario, &index, hierarchy, model, rates, opts)?;
    for _ in 0..opts.rate_refinements {
        let strategies = &solution.strategies;
        let rates = propagate_rates(&index, hierarchy, |node, s| {
            strategies
                .get(node, s)
                .map(|e| e.strategy.probs.clone())
                .unwrap_or_default()
        });
        solution = solve_with_rates(scenario, &index, hierarchy, model, rates, opts)?;
    }
    Ok(solution)
}

struct StageOutcome {
    entries: Vec<(NodeId, StrategyEntry, f64)>,
    audit: AuditEntry,
}

/// One backward pass with fixed forwarded rates.
pub fn solve_with_rates(
    scenario: &Scenario,
    index: &NodeIndex,
    hierarchy: &HierarchyAssignment,
    model: &StateModel,
    rates: RateTable,
    opts: &SolveOptions,
) -> Result<Solution> {
    let n_states = model.num_states();
    let l_count = hierarchy.level_count;
    let cap = scenario.game.delay_cap;
    let beta = scenario.game.beta;

    let nodes: BTreeSet<NodeId> = hierarchy
        .states
        .iter()
        .flat_map(|h| h.admitted())
        .collect();
    let mut stage: BTreeMap<NodeId, Vec<f64>> =
        nodes.iter().map(|&n| (n, vec![0.0; n_states])).collect();
    let mut strategies = StrategyTable::default();
    let mut audit = Vec::new();

    for level in (1..=l_count).rev() {
        let outcomes = (0..n_states)
            .into_par_iter()
            .map(|s| {
                let h = &hierarchy.states[s];
                let continuation: BTreeMap<NodeId, f64> = if level < l_count {
                    h.levels[level]
                        .iter()
                        .map(|&c| (c, stage[&c][s]))
                        .collect()
                } else {
                    BTreeMap::new()
                };
                let game = build_stage_game(
                    index,
                    h,
                    level,
                    &continuation,
                    |n| rates.get(&n).map_or(0.0, |r| r[s]),
                    cap,
                )?;
                let (profile, trace) = fictitious_play(&game, &opts.fp);
                let values = equilibrium_value(&game, &profile)?;
                let entries = game
                    .players
                    .iter()
                    .enumerate()
                    .map(|(i, &node)| {
                        let entry = StrategyEntry {
                            level,
                            candidates: game.actions[i].clone(),
                            stage_delays: game.expected_stage_delays(i, &profile),
                            strategy: profile[i].clone(),
                        };
                        (node, entry, values[i])
                    })
                    .collect();
                Ok(StageOutcome {
                    entries,
                    audit: AuditEntry {
                        state: s,
                        level,
                        players: game.players.len(),
                        iterations: trace.iterations,
                        converged: trace.converged,
                        relative_gap: trace.relative_gap(),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, outcome) in outcomes.into_iter().enumerate() {
            for (node, entry, value) in outcome.entries {
                stage.get_mut(&node).expect("admitted node")[s] = value;
                strategies.insert(node, s, entry);
            }
            audit.push(outcome.audit);
        }
    }

    let values = stage
        .iter()
        .map(|(&n, r)| Ok((n, solve_markov_values(r, &model.transition, beta)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Solution {
        strategies,
        values: ValueTable { stage, values },
        rates,
        audit,
        level_count: l_count,
        cpcs: hierarchy.cpcs.clone(),
        beta,
        transition: model.transition.clone(),
    })
}

/// Rebuilds the stage game of `level` at `state` with the continuation
/// values and forwarded rates of a solution.
pub fn stage_game_of(
    scenario: &Scenario,
    hierarchy: &HierarchyAssignment,
    solution: &Solution,
    state: usize,
    level: usize,
) -> Result<StageGame> {
    let h = hierarchy
        .states
        .get(state)
        .ok_or_else(|| Error::Validation(format!("state {state} out of range")))?;
    let continuation: BTreeMap<NodeId, f64> = if level < hierarchy.level_count {
        h.levels[level]
            .iter()
            .map(|&c| (c, solution.values.stage[&c][state]))
            .collect()
    } else {
        BTreeMap::new()
    };
    build_stage_game(
        &scenario.index(),
        h,
        level,
        &continuation,
        |n| solution.rates.get(&n).map_or(0.0, |r| r[state]),
        scenario.game.delay_cap,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_zero_returns_r() {
        let r = vec![0.1, 0.2 + 1e-17, 3.0];
        let p = vec![vec![1.0 / 3.0; 3]; 3];
        assert_eq!(solve_markov_values(&r, &p, 0.0).unwrap(), r);
    }

    #[test]
    fn single_state_geometric_series() {
        let v = solve_markov_values(&[1.0], &[vec![1.0]], 0.5).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let err = solve_markov_values(&[1.0, 2.0], &[vec![1.0]], 0.5).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }
}
