use std::collections::{BTreeMap, BTreeSet};

use super::Corridor;
use crate::scenario::{Role, Scenario, StateModel};
use crate::{Error, NodeId, Result};

/// Levels and next-hop candidates at one system state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateHierarchy {
    pub state: usize,
    /// `levels[l - 1]` holds the admitted nodes of level `l`, sorted by id.
    pub levels: Vec<Vec<NodeId>>,
    pub level_of: BTreeMap<NodeId, usize>,
    /// Next-hop candidates of every admitted node, sorted by id. Terminal
    /// level nodes have the CPC set.
    pub candidates: BTreeMap<NodeId, Vec<NodeId>>,
    /// Relays pruned at this state because a PU they sit under is occupied.
    pub blocked: Vec<NodeId>,
    /// Sources without a path to a CPC (only with `drop_unreachable_sources`).
    pub dropped_sources: Vec<NodeId>,
}

impl StateHierarchy {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn admitted(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.levels.iter().flatten().copied()
    }

    pub fn candidates_of(&self, node: NodeId) -> &[NodeId] {
        self.candidates.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Hierarchy for every state of the PU chain. The level count is the same at
/// every state.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyAssignment {
    pub level_count: usize,
    pub cpcs: Vec<NodeId>,
    /// Geometric band of every corridor relay (state independent).
    pub band_of: BTreeMap<NodeId, usize>,
    pub states: Vec<StateHierarchy>,
}

impl HierarchyAssignment {
    pub fn state(&self, s: usize) -> &StateHierarchy {
        &self.states[s]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HierarchyOptions {
    /// Record sources with no path instead of failing.
    pub drop_unreachable_sources: bool,
}

/// `L`: the configured level count, or `⌈axis length / radio range⌉` (at
/// least 1) so that each band is one hop wide.
pub fn level_count(scenario: &Scenario, corridor: &Corridor) -> usize {
    scenario.game.levels.unwrap_or_else(|| {
        let ratio = corridor.axis.length() / scenario.radio.interference_range;
        ((ratio - 1e-9).ceil() as usize).max(1)
    })
}

fn bands(scenario: &Scenario, corridor: &Corridor, l_count: usize) -> BTreeMap<NodeId, usize> {
    let len = corridor.axis.length();
    let width = len / l_count as f64;
    scenario
        .nodes
        .relays
        .iter()
        .filter(|r| corridor.contains(&r.pos))
        .map(|r| {
            let band = if width > 0.0 {
                ((corridor.project(&r.pos).arc / width).floor() as usize + 1).min(l_count)
            } else {
                1
            };
            (r.id, band)
        })
        .collect()
}

/// True when the PU whose footprint edge is nearest to `node` is occupied at
/// `state` and `node` lies inside that footprint.
fn blocked(scenario: &Scenario, model: &StateModel, state: usize, pos: &crate::Point) -> bool {
    let nearest = scenario
        .pus
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let ca = a.1.center.dist(pos) - a.1.footprint_radius;
            let cb = b.1.center.dist(pos) - b.1.footprint_radius;
            ca.total_cmp(&cb)
        })
        .map(|(k, _)| k);
    match nearest {
        Some(k) => model.is_occupied(state, k) && scenario.pus[k].in_footprint(pos),
        None => false,
    }
}

fn assign_with_bands(
    scenario: &Scenario,
    model: &StateModel,
    band_of: &BTreeMap<NodeId, usize>,
    l_count: usize,
    state: usize,
    opts: HierarchyOptions,
) -> Result<StateHierarchy> {
    let index = scenario.index();
    let range = scenario.radio.interference_range;
    let cpcs = scenario.cpc_ids();

    let mut raw: Vec<Vec<NodeId>> = vec![Vec::new(); l_count];
    let mut blocked_nodes = Vec::new();
    for (&id, &band) in band_of {
        if blocked(scenario, model, state, &index.pos(id)) {
            blocked_nodes.push(id);
        } else {
            raw[band - 1].push(id);
        }
    }
    let sources = scenario.source_ids();

    let mut levels: Vec<Vec<NodeId>> = vec![Vec::new(); l_count];
    let mut candidates = BTreeMap::new();
    let mut dropped = Vec::new();
    for l in (1..=l_count).rev() {
        let mut members: Vec<(NodeId, Role)> =
            raw[l - 1].iter().map(|&id| (id, Role::Relay)).collect();
        if l == 1 {
            members.extend(sources.iter().map(|&id| (id, Role::Source)));
        }
        for (id, role) in members {
            let p = index.pos(id);
            let cands: Vec<NodeId> = if l == l_count {
                // the terminal hop must reach at least one CPC station
                if cpcs.iter().any(|&c| index.pos(c).dist(&p) <= range) {
                    cpcs.clone()
                } else {
                    Vec::new()
                }
            } else {
                levels[l]
                    .iter()
                    .copied()
                    .filter(|&c| index.pos(c).dist(&p) <= range)
                    .collect()
            };
            if cands.is_empty() {
                if role == Role::Source {
                    if opts.drop_unreachable_sources {
                        dropped.push(id);
                        continue;
                    }
                    return Err(Error::Unreachable(format!(
                        "source {id} has no admissible level-{} node within range at state {state}",
                        l + 1
                    )));
                }
                continue;
            }
            levels[l - 1].push(id);
            candidates.insert(id, cands);
        }
        levels[l - 1].sort();
    }

    let level_of = levels
        .iter()
        .enumerate()
        .flat_map(|(l, ids)| ids.iter().map(move |&id| (id, l + 1)))
        .collect();
    Ok(StateHierarchy {
        state,
        levels,
        level_of,
        candidates,
        blocked: blocked_nodes,
        dropped_sources: dropped,
    })
}

/// Hierarchy at one state.
///
/// Corridor relays fall into `L` equal arc-length bands by their nearest axis
/// point; sources join level 1. A level-`l` node may forward to admitted
/// level-`l+1` nodes within radio range; level-`L` nodes forward to the CPC
/// stations and are admitted only when some station is within range.
/// Relays inside the footprint of an occupied PU are not admitted, nor are
/// relays left without any candidate.
pub fn assign_levels(
    scenario: &Scenario,
    corridor: &Corridor,
    model: &StateModel,
    state: usize,
    opts: HierarchyOptions,
) -> Result<StateHierarchy> {
    let l_count = level_count(scenario, corridor);
    let band_of = bands(scenario, corridor, l_count);
    assign_with_bands(scenario, model, &band_of, l_count, state, opts)
}

pub fn build_hierarchy(
    scenario: &Scenario,
    corridor: &Corridor,
    model: &StateModel,
    opts: HierarchyOptions,
) -> Result<HierarchyAssignment> {
    let l_count = level_count(scenario, corridor);
    let band_of = bands(scenario, corridor, l_count);
    let states = (0..model.num_states())
        .map(|s| assign_with_bands(scenario, model, &band_of, l_count, s, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(HierarchyAssignment {
        level_count: l_count,
        cpcs: scenario.cpc_ids(),
        band_of,
        states,
    })
}

impl StateHierarchy {
    /// Checks the structural invariants: levels are disjoint, sources sit at
    /// level 1, terminal candidates are the CPC set and every other admitted
    /// node has a candidate one level up.
    pub fn check(&self, sources: &[NodeId], cpcs: &[NodeId]) -> Result<()> {
        let l_count = self.levels.len();
        let mut seen = BTreeSet::new();
        for (l, ids) in self.levels.iter().enumerate() {
            for id in ids {
                if !seen.insert(*id) {
                    return Err(Error::Validation(format!("node {id} in two levels")));
                }
                if self.level_of.get(id) != Some(&(l + 1)) {
                    return Err(Error::Validation(format!("level_of mismatch for {id}")));
                }
                let cands = self.candidates_of(*id);
                if cands.is_empty() {
                    return Err(Error::DeadEnd(*id));
                }
                if l + 1 == l_count {
                    if cands != cpcs {
                        return Err(Error::Validation(format!(
                            "terminal node {id} candidates differ from the CPC set"
                        )));
                    }
                } else if cands.iter().any(|c| self.level_of.get(c) != Some(&(l + 2))) {
                    return Err(Error::Validation(format!(
                        "node {id} has a candidate outside level {}",
                        l + 2
                    )));
                }
            }
        }
        if seen.len() != self.level_of.len() {
            return Err(Error::Validation("level_of lists unknown nodes".into()));
        }
        for s in sources {
            if !self.dropped_sources.contains(s) && self.level_of.get(s) != Some(&1) {
                return Err(Error::Validation(format!("source {s} is not at level 1")));
            }
        }
        Ok(())
    }
}
