//! Reference routing: Dijkstra shortest paths and medial-axis (MA) routing.
//!
//! Both are blind to PU occupancy; they see only node positions and radio
//! range.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::dynprog::RoutePath;
use crate::geometry::MedialAxis;
use crate::scenario::{Point, Role, Scenario};
use crate::{Error, NodeId, Result};

/// Undirected graph with positive edge weights. Terminal vertices (CPC
/// stations) are entered but never relayed through.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    ids: Vec<NodeId>,
    slot: BTreeMap<NodeId, usize>,
    adj: Vec<Vec<(usize, f64)>>,
    terminal: Vec<bool>,
}

impl WeightedGraph {
    /// Graph over `vertices` with explicit weighted edges.
    pub fn from_edges(
        vertices: &[NodeId],
        edges: &[(NodeId, NodeId, f64)],
        terminals: &[NodeId],
    ) -> Result<Self> {
        let mut ids = vertices.to_vec();
        ids.sort();
        ids.dedup();
        let slot: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for &(a, b, w) in edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop at {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Validation(format!("edge {a}-{b} has weight {w}")));
            }
            let (ia, ib) = match (slot.get(&a), slot.get(&b)) {
                (Some(&ia), Some(&ib)) => (ia, ib),
                _ => return Err(Error::Validation(format!("edge {a}-{b} has an unknown end"))),
            };
            adj[ia].push((ib, w));
            adj[ib].push((ia, w));
        }
        for list in adj.iter_mut() {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        let terminal = ids.iter().map(|n| terminals.contains(n)).collect();
        Ok(WeightedGraph {
            ids,
            slot,
            adj,
            terminal,
        })
    }

    /// Geometric graph: vertices within `range` of each other are joined by
    /// an edge weighted by their distance.
    pub fn geometric(vertices: &[(NodeId, Point)], range: f64, terminals: &[NodeId]) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, (a, pa)) in vertices.iter().enumerate() {
            for (b, pb) in &vertices[i + 1..] {
                let d = pa.dist(pb);
                if d <= range && d > 0.0 {
                    edges.push((*a, *b, d));
                }
            }
        }
        let ids: Vec<NodeId> = vertices.iter().map(|v| v.0).collect();
        WeightedGraph::from_edges(&ids, &edges, terminals)
    }

    /// All SU nodes and CPC stations of a scenario, linked within radio range.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let vertices: Vec<(NodeId, Point)> = scenario.nodes.iter().map(|(_, n)| (n.id, n.pos)).collect();
        WeightedGraph::geometric(&vertices, scenario.radio.interference_range, &scenario.cpc_ids())
    }

    pub fn vertices(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn neighbors(&self, node: NodeId) -> Vec<(NodeId, f64)> {
        self.slot
            .get(&node)
            .map(|&i| self.adj[i].iter().map(|&(j, w)| (self.ids[j], w)).collect())
            .unwrap_or_default()
    }

    /// Every edge once, as `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &(j, w) in list {
                if i < j {
                    out.push((self.ids[i], self.ids[j], w));
                }
            }
        }
        out
    }

    pub fn is_terminal(&self, node: NodeId) -> bool {
        self.slot.get(&node).is_some_and(|&i| self.terminal[i])
    }
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    slot: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; lower slot (= lower id) first on ties
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.slot.cmp(&self.slot))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight path from `source` to the closest of `dests`, with its
/// weight. Among equal-weight paths the one whose predecessors have the
/// lowest ids wins; among equally close destinations, the lowest id.
pub fn shortest_path(
    graph: &WeightedGraph,
    source: NodeId,
    dests: &[NodeId],
) -> Result<(Vec<NodeId>, f64)> {
    let &src = graph
        .slot
        .get(&source)
        .ok_or_else(|| Error::Unreachable(format!("source {source} is not in the graph")))?;
    let n = graph.ids.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry { dist: 0.0, slot: src });
    while let Some(Entry { dist: d, slot: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if graph.terminal[u] && u != src {
            continue;
        }
        for &(v, w) in &graph.adj[u] {
            if done[v] {
                continue;
            }
            let nd = d + w;
            let better = nd < dist[v] || (nd == dist[v] && pred[v].is_some_and(|p| u < p));
            if better {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Entry { dist: nd, slot: v });
            }
        }
    }
    let target = dests
        .iter()
        .filter_map(|d| graph.slot.get(d).copied())
        .filter(|&t| dist[t].is_finite())
        .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
        .ok_or_else(|| Error::Unreachable(format!("no CPC station reachable from {source}")))?;
    let mut path = vec![graph.ids[target]];
    let mut cur = target;
    while let Some(p) = pred[cur] {
        path.push(graph.ids[p]);
        cur = p;
    }
    path.reverse();
    Ok((path, dist[target]))
}

/// Dijkstra route from `source` to the nearest (by path weight) CPC.
pub fn dijkstra_route(graph: &WeightedGraph, source: NodeId, dests: &[NodeId]) -> Result<RoutePath> {
    let (nodes, _) = shortest_path(graph, source, dests)?;
    Ok(RoutePath::state_blind(nodes))
}

/// Medial-axis routing.
///
/// Relays within the axis tolerance are axis nodes. Starting from the axis
/// node closest to the source end, a single chain advances greedily to the
/// reachable axis node furthest along the axis until a CPC is within range.
/// Every source joins the chain at its nearest chain node, follows it to the
/// end and finishes at the CPC nearest the chain's last node, so all sources
/// share the chain's hops.
#[derive(Clone, Debug)]
pub struct MaRouter {
    pub chain: Vec<NodeId>,
    positions: BTreeMap<NodeId, Point>,
    pub exit: NodeId,
    range: f64,
}

impl MaRouter {
    pub fn new(scenario: &Scenario, axis: &MedialAxis) -> Result<Self> {
        let range = scenario.radio.interference_range;
        let tol = scenario.baselines.ma_axis_tolerance.unwrap_or(range / 2.0);
        let mut axis_nodes: Vec<(f64, NodeId, Point)> = scenario
            .nodes
            .relays
            .iter()
            .filter_map(|r| {
                let proj = axis.project(&r.pos);
                (proj.distance <= tol).then_some((proj.arc, r.id, r.pos))
            })
            .collect();
        axis_nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if axis_nodes.is_empty() {
            return Err(Error::Unreachable("no relay lies on the medial axis".into()));
        }
        let cpcs: Vec<(NodeId, Point)> = scenario
            .nodes
            .cpc_stations
            .iter()
            .map(|c| (c.id, c.pos))
            .collect();
        let nearest_cpc = |p: &Point| {
            cpcs.iter()
                .filter(|(_, q)| q.dist(p) <= range)
                .min_by(|a, b| a.1.dist(p).total_cmp(&b.1.dist(p)).then(a.0.cmp(&b.0)))
                .map(|c| c.0)
        };

        let mut at = 0;
        let mut chain = vec![axis_nodes[0].1];
        let exit = loop {
            let (arc, _, pos) = axis_nodes[at];
            if let Some(c) = nearest_cpc(&pos) {
                break c;
            }
            let next = axis_nodes
                .iter()
                .enumerate()
                .filter(|(_, (a, _, p))| *a > arc && p.dist(&pos) <= range)
                .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then(y.1 .1.cmp(&x.1 .1)))
                .map(|(k, _)| k);
            match next {
                Some(k) => {
                    at = k;
                    chain.push(axis_nodes[k].1);
                }
                None => {
                    return Err(Error::Unreachable(format!(
                        "medial-axis chain breaks after node {}",
                        axis_nodes[at].1
                    )))
                }
            }
        };
        let positions = axis_nodes.iter().map(|&(_, id, p)| (id, p)).collect();
        Ok(MaRouter {
            chain,
            positions,
            exit,
            range,
        })
    }

    pub fn route(&self, source: NodeId, source_pos: Point) -> Result<RoutePath> {
        let join = self
            .chain
            .iter()
            .enumerate()
            .map(|(k, id)| (k, self.positions[id].dist(&source_pos)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("chain is nonempty");
        if join.1 > self.range {
            return Err(Error::Unreachable(format!(
                "source {source} has no medial-axis node within range"
            )));
        }
        let mut nodes = vec![source];
        nodes.extend_from_slice(&self.chain[join.0..]);
        nodes.push(self.exit);
        Ok(RoutePath::state_blind(nodes))
    }
}

/// MA route of one source; builds the chain on every call.
pub fn ma_route(scenario: &Scenario, axis: &MedialAxis, source: NodeId) -> Result<RoutePath> {
    let pos = scenario
        .nodes
        .iter()
        .find(|(role, n)| *role == Role::Source && n.id == source)
        .map(|(_, n)| n.pos)
        .ok_or_else(|| Error::Validation(format!("{source} is not a source")))?;
    MaRouter::new(scenario, axis)?.route(source, pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn triangle_prefers_two_hops() {
        let g = WeightedGraph::from_edges(
            &ids(&[1, 2, 3]),
            &[(NodeId(1), NodeId(2), 1.0), (NodeId(2), NodeId(3), 1.0), (NodeId(1), NodeId(3), 3.0)],
            &ids(&[3]),
        )
        .unwrap();
        let (path, w) = shortest_path(&g, NodeId(1), &ids(&[3])).unwrap();
        assert_eq!(path, ids(&[1, 2, 3]));
        assert_eq!(w, 2.0);
    }

    #[test]
    fn equal_paths_take_lower_ids() {
        let e = |a, b| (NodeId(a), NodeId(b), 1.0);
        let g = WeightedGraph::from_edges(&ids(&[1, 2, 3, 4]), &[e(1, 3), e(1, 2), e(3, 4), e(2, 4)], &ids(&[4]))
            .unwrap();
        let (path, _) = shortest_path(&g, NodeId(1), &ids(&[4])).unwrap();
        assert_eq!(path, ids(&[1, 2, 4]));
    }

    #[test]
    fn terminals_are_not_relays() {
        let e = |a, b| (NodeId(a), NodeId(b), 1.0);
        let g = WeightedGraph::from_edges(&ids(&[1, 2, 3]), &[e(1, 2), e(2, 3)], &ids(&[2])).unwrap();
        assert!(shortest_path(&g, NodeId(1), &ids(&[3])).is_err());
    }

    #[test]
    fn disconnected_source_is_unreachable() {
        let g = WeightedGraph::from_edges(&ids(&[1, 2]), &[], &ids(&[2])).unwrap();
        let err = shortest_path(&g, NodeId(1), &ids(&[2])).unwrap_err();
        assert!(matches!(err, Error::Unreachable(_)));
    }
}
