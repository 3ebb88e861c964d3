use rand::RngCore;

use super::Solution;
use crate::rng::{categorical, rng};
use crate::{Error, NodeId, Result};

/// A realized path from a source to a CPC station.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutePath {
    /// Nodes in order, source first, CPC last.
    pub nodes: Vec<NodeId>,
    /// PU state of each hop.
    pub states: Vec<usize>,
    /// Expected queueing delay of each hop (s).
    pub stage_delays: Vec<f64>,
}

impl RoutePath {
    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("route has a source")
    }

    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

/// Samples a path by drawing each hop from the node's mixed strategy at
/// `state`.
pub fn realize_route(
    solution: &Solution,
    state: usize,
    source: NodeId,
    seed: u64,
) -> Result<RoutePath> {
    let mut r = rng(seed);
    realize_route_with(solution, state, source, &mut r)
}

/// [`realize_route`] drawing from a caller-supplied generator.
pub fn realize_route_with(
    solution: &Solution,
    state: usize,
    source: NodeId,
    rng: &mut impl RngCore,
) -> Result<RoutePath> {
    let mut path = RoutePath {
        nodes: vec![source],
        states: Vec::new(),
        stage_delays: Vec::new(),
    };
    let mut node = source;
    while !solution.cpcs.contains(&node) {
        if path.states.len() > solution.level_count {
            return Err(Error::DeadEnd(node));
        }
        let entry = solution
            .strategies
            .get(node, state)
            .ok_or(Error::DeadEnd(node))?;
        let a = categorical(rng, &entry.strategy.probs);
        node = entry.candidates[a];
        path.nodes.push(node);
        path.states.push(state);
        path.stage_delays.push(entry.stage_delays[a]);
    }
    Ok(path)
}

impl RoutePath {
    /// Path produced without a state or delay model (baseline routing).
    /// `states` and `stage_delays` are left empty.
    pub fn state_blind(nodes: Vec<NodeId>) -> Self {
        RoutePath {
            nodes,
            states: Vec::new(),
            stage_delays: Vec::new(),
        }
    }

    /// The same path with every hop evaluated at `state`.
    pub fn at_state(mut self, state: usize) -> Self {
        self.states = vec![state; self.hops()];
        self
    }
}
