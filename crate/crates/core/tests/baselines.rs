mod common;

use common::*;
use cpc_routing::baselines::{dijkstra_route, ma_route, shortest_path, MaRouter, WeightedGraph};
use cpc_routing::geometry::HierarchyOptions;
use cpc_routing::network::Network;
use cpc_routing::{Error, NodeId};
use proptest::prelude::*;

fn ids(v: &[u32]) -> Vec<NodeId> {
    v.iter().map(|&i| NodeId(i)).collect()
}

#[test]
fn single_edge() {
    let g = WeightedGraph::from_edges(&ids(&[1, 2]), &[(NodeId(1), NodeId(2), 3.0)], &ids(&[2])).unwrap();
    let (path, w) = shortest_path(&g, NodeId(1), &ids(&[2])).unwrap();
    assert_eq!(path, ids(&[1, 2]));
    assert_eq!(w, 3.0);
}

#[test]
fn triangle_prefers_two_short_edges() {
    let edges = [
        (NodeId(1), NodeId(2), 1.0),
        (NodeId(2), NodeId(3), 1.0),
        (NodeId(1), NodeId(3), 3.0),
    ];
    let g = WeightedGraph::from_edges(&ids(&[1, 2, 3]), &edges, &ids(&[3])).unwrap();
    let (path, w) = shortest_path(&g, NodeId(1), &ids(&[3])).unwrap();
    assert_eq!(path, ids(&[1, 2, 3]));
    assert_eq!(w, 2.0);
    let route = dijkstra_route(&g, NodeId(1), &ids(&[3])).unwrap();
    assert_eq!(route.nodes, path);
    assert!(route.states.is_empty());
}

#[test]
fn disconnected_source_is_unreachable() {
    let g = WeightedGraph::from_edges(&ids(&[1, 2, 3]), &[(NodeId(2), NodeId(3), 1.0)], &ids(&[3])).unwrap();
    assert!(matches!(shortest_path(&g, NodeId(1), &ids(&[3])), Err(Error::Unreachable(_))));
    assert!(matches!(shortest_path(&g, NodeId(7), &ids(&[3])), Err(Error::Unreachable(_))));
}

#[test]
fn terminals_are_not_relayed_through() {
    // 1 - 9 - 3 is shorter but 9 is a CPC station
    let edges = [
        (NodeId(1), NodeId(9), 1.0),
        (NodeId(9), NodeId(3), 1.0),
        (NodeId(1), NodeId(2), 2.0),
        (NodeId(2), NodeId(3), 2.0),
    ];
    let g = WeightedGraph::from_edges(&ids(&[1, 2, 3, 9]), &edges, &ids(&[3, 9])).unwrap();
    let (path, w) = shortest_path(&g, NodeId(1), &ids(&[3])).unwrap();
    assert_eq!(path, ids(&[1, 2, 3]));
    assert_eq!(w, 4.0);
}

#[test]
fn invalid_edges_are_rejected() {
    let v = ids(&[1, 2]);
    for e in [
        (NodeId(1), NodeId(1), 1.0),
        (NodeId(1), NodeId(2), 0.0),
        (NodeId(1), NodeId(2), f64::NAN),
        (NodeId(1), NodeId(5), 1.0),
    ] {
        assert!(WeightedGraph::from_edges(&v, &[e], &[]).is_err());
    }
}

/// Bellman-Ford distances from `src`, never relaying through terminals.
fn bellman_ford(g: &WeightedGraph, src: NodeId) -> std::collections::BTreeMap<NodeId, f64> {
    let mut dist: std::collections::BTreeMap<NodeId, f64> =
        g.vertices().iter().map(|&v| (v, f64::INFINITY)).collect();
    dist.insert(src, 0.0);
    for _ in 0..g.vertices().len() {
        for (a, b, w) in g.edges() {
            for (u, v) in [(a, b), (b, a)] {
                if u != src && g.is_terminal(u) {
                    continue;
                }
                if dist[&u] + w < dist[&v] {
                    dist.insert(v, dist[&u] + w);
                }
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dijkstra_agrees_with_bellman_ford(
        n in 2usize..12,
        raw in proptest::collection::vec((0usize..12, 0usize..12, 1u32..20), 0..40),
        n_dest in 1usize..3,
    ) {
        let vertices: Vec<NodeId> = (1..=n as u32).map(NodeId).collect();
        let edges: Vec<(NodeId, NodeId, f64)> = raw
            .iter()
            .filter(|(a, b, _)| a % n != b % n)
            .map(|&(a, b, w)| (vertices[a % n], vertices[b % n], w as f64 / 4.0))
            .collect();
        let dests: Vec<NodeId> = vertices[n - n_dest.min(n - 1)..].to_vec();
        let g = WeightedGraph::from_edges(&vertices, &edges, &dests).unwrap();
        let oracle = bellman_ford(&g, vertices[0]);
        let best = dests.iter().map(|d| oracle[d]).fold(f64::INFINITY, f64::min);
        match shortest_path(&g, vertices[0], &dests) {
            Ok((path, w)) => {
                prop_assert!((w - best).abs() < 1e-12);
                prop_assert_eq!(path[0], vertices[0]);
                prop_assert!(dests.contains(path.last().unwrap()));
                let mut total = 0.0;
                for pair in path.windows(2) {
                    let hop = g
                        .neighbors(pair[0])
                        .iter()
                        .filter(|(v, _)| *v == pair[1])
                        .map(|(_, w)| *w)
                        .fold(f64::INFINITY, f64::min);
                    prop_assert!(hop.is_finite());
                    total += hop;
                }
                prop_assert!((total - w).abs() < 1e-12);
            }
            Err(_) => prop_assert!(best.is_infinite()),
        }
    }
}

#[test]
fn ma_chain_advances_along_the_axis() {
    for name in ["fig3.toml", "fig5_scaled.toml"] {
        let s = load(name).realize(3).unwrap();
        let net = Network::prepare(&s, HierarchyOptions { drop_unreachable_sources: true }).unwrap();
        let ma = MaRouter::new(&net.scenario, &net.axis).unwrap();
        let index = net.scenario.index();
        let arcs: Vec<f64> = ma.chain.iter().map(|&n| net.axis.project(&index.pos(n)).arc).collect();
        for w in arcs.windows(2) {
            assert!(w[0] < w[1], "{name}: chain goes backwards: {arcs:?}");
        }
        let range = net.scenario.radio.interference_range;
        for w in ma.chain.windows(2) {
            assert!(index.pos(w[0]).dist(&index.pos(w[1])) <= range);
        }
        assert!(index.pos(*ma.chain.last().unwrap()).dist(&index.pos(ma.exit)) <= range);
    }
}

#[test]
fn sources_share_the_axis_chain() {
    let s = load("fig3.toml");
    let net = Network::prepare(&s, HierarchyOptions::default()).unwrap();
    let ma = MaRouter::new(&net.scenario, &net.axis).unwrap();
    let index = net.scenario.index();
    let routes: Vec<_> = s
        .source_ids()
        .into_iter()
        .map(|src| ma.route(src, index.pos(src)).unwrap())
        .collect();
    for r in &routes {
        // everything after the source is a suffix of the shared chain
        let tail = &r.nodes[1..r.nodes.len() - 1];
        assert!(ma.chain.ends_with(tail));
        assert_eq!(r.destination(), ma.exit);
    }
    let last_hop = |r: &cpc_routing::dynprog::RoutePath| r.nodes[r.nodes.len() - 2];
    assert!(routes.windows(2).all(|w| last_hop(&w[0]) == last_hop(&w[1])));
    assert_eq!(ma_route(&net.scenario, &net.axis, NodeId(1)).unwrap(), routes[0]);
}
