mod common;

use std::collections::BTreeSet;

use common::*;
use cpc_routing::geometry::{
    assign_levels, build_hierarchy, compute_medial_axis, corridor_members, footprint_clearance,
    Corridor, HierarchyOptions,
};
use cpc_routing::network::Network;
use cpc_routing::scenario::{build_state_model, GameConfig, Node, NodeSet, PrimaryUser};
use cpc_routing::{Error, NodeId, Point, Scenario};

fn two_pu_scenario() -> Scenario {
    let pus = vec![
        PrimaryUser::two_state(1, Point::new(-0.5, 0.0), 0.3, 0.2, 0.2),
        PrimaryUser::two_state(2, Point::new(0.5, 0.0), 0.3, 0.2, 0.2),
    ];
    let nodes = NodeSet {
        sources: vec![Node::new(1, 0.0, -0.9)],
        relays: vec![],
        cpc_stations: vec![Node::new(2, 0.0, 0.9)],
    };
    bare_scenario(pus, nodes, GameConfig::default())
}

#[test]
fn symmetric_pus_give_the_bisector() {
    let s = two_pu_scenario();
    let axis = compute_medial_axis(&s).unwrap();
    let res = s.game.grid_resolution;
    assert!(axis.points.len() > 10);
    for p in &axis.points {
        assert!(p.x.abs() <= res / 2.0 + 1e-12, "axis point off the bisector: {p:?}");
    }
    for w in axis.points.windows(2) {
        let d = w[0].dist(&w[1]);
        // the ridge search may bridge one-cell gaps
        assert!(d > 0.0 && d <= 2.0 * res * 2f64.sqrt() + 1e-12);
    }
    // ordered from the source side to the CPC side
    assert!(axis.points[0].y < axis.points.last().unwrap().y);
}

#[test]
fn scaled_layout_axis_avoids_both_footprints() {
    let s = load("fig5_scaled.toml");
    let axis = compute_medial_axis(&s).unwrap();
    for p in &axis.points {
        assert!(s.region.contains(p));
        for pu in &s.pus {
            assert!(!pu.in_footprint(p), "axis point {p:?} inside PU {}", pu.id);
        }
    }
    assert!(axis.received_power.iter().all(|&w| w > 0.0 && w.is_finite()));
}

#[test]
fn single_pu_axis_is_equidistant_to_footprint_and_boundary() {
    let pus = vec![PrimaryUser::two_state(1, Point::new(0.0, 0.0), 0.3, 0.2, 0.2)];
    let nodes = NodeSet {
        sources: vec![Node::new(1, 0.0, -0.9)],
        relays: vec![],
        cpc_stations: vec![Node::new(2, 0.9, 0.0)],
    };
    let s = bare_scenario(pus, nodes, GameConfig::default());
    let axis = compute_medial_axis(&s).unwrap();
    let res = s.game.grid_resolution;
    for p in &axis.points {
        // brute-force distances to the two obstacles
        let to_disk = p.dist(&Point::new(0.0, 0.0)) - 0.3;
        let to_edge = s.region.boundary_distance(p);
        assert!((to_disk - to_edge).abs() <= 1.5 * res, "{p:?}: {to_disk} vs {to_edge}");
    }
}

#[test]
fn covered_region_has_no_axis() {
    let pus = vec![PrimaryUser::two_state(1, Point::new(0.0, 0.0), 5.0, 0.2, 0.2)];
    let nodes = NodeSet {
        sources: vec![Node::new(1, 0.0, -0.9)],
        relays: vec![],
        cpc_stations: vec![Node::new(2, 0.0, 0.9)],
    };
    let s = bare_scenario(pus, nodes, GameConfig::default());
    assert!(matches!(compute_medial_axis(&s), Err(Error::NoAxis(_))));
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> (f64, Point) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = Point::new(a.x + t * dx, a.y + t * dy);
    (q.dist(p), q)
}

#[test]
fn corridor_matches_pointwise_definition_on_fig3() {
    let s = load("fig3.toml");
    let axis = compute_medial_axis(&s).unwrap();
    let members = corridor_members(&axis, &s.pus, &s.nodes, 0.7).unwrap();
    let mut oracle = BTreeSet::new();
    for n in s.nodes.su_nodes() {
        let (d, q) = axis
            .points
            .windows(2)
            .map(|w| segment_distance(&n.pos, &w[0], &w[1]))
            .fold((f64::INFINITY, n.pos), |best, c| if c.0 < best.0 { c } else { best });
        let r = footprint_clearance(&s.pus, &q).max(0.0);
        if d <= r * 1.7 {
            oracle.insert(n.id);
        }
    }
    assert_eq!(members, oracle);
    // relays 5..=14 sit in the gap between the PUs
    for id in 5..=14 {
        assert!(members.contains(&NodeId(id)), "relay {id} outside the corridor");
    }
}

#[test]
fn axis_points_are_always_members() {
    let s = load("fig3.toml");
    let axis = compute_medial_axis(&s).unwrap();
    for w in [0.01, 0.3, 1.0] {
        let c = Corridor::new(axis.clone(), &s.pus, w).unwrap();
        for p in &axis.points {
            assert!(c.contains(p));
        }
    }
}

#[test]
fn omega_must_lie_in_unit_interval() {
    let s = load("fig3.toml");
    let axis = compute_medial_axis(&s).unwrap();
    for w in [0.0, -0.1, 1.01] {
        assert!(corridor_members(&axis, &s.pus, &s.nodes, w).is_err());
    }
}

#[test]
fn deep_footprint_nodes_are_not_members() {
    let s = load("fig3.toml");
    let axis = compute_medial_axis(&s).unwrap();
    let mut nodes = s.nodes.clone();
    nodes.relays.push(Node::new(99, -0.55, 0.0));
    let m = corridor_members(&axis, &s.pus, &nodes, 1.0).unwrap();
    assert!(!m.contains(&NodeId(99)));
}

fn minimal_network() -> Network {
    Network::prepare(&load("minimal.toml"), HierarchyOptions::default()).unwrap()
}

#[test]
fn thin_corridor_two_relays() {
    let mut s = load("minimal.toml");
    s.nodes.relays.push(Node::new(4, -0.05, 0.15));
    let net = Network::prepare(&s, HierarchyOptions::default()).unwrap();
    assert_eq!(net.hierarchy.level_count, 2);
    let h = &net.hierarchy.states[0];
    assert_eq!(h.candidates_of(NodeId(1)), &[NodeId(3), NodeId(4)]);
    assert_eq!(h.candidates_of(NodeId(3)), &[NodeId(2)]);
    h.check(&s.source_ids(), &s.cpc_ids()).unwrap();
}

#[test]
fn minimal_hierarchy() {
    let net = minimal_network();
    for h in &net.hierarchy.states {
        assert_eq!(h.levels, vec![vec![NodeId(1)], vec![NodeId(3)]]);
    }
}

#[test]
fn fig3_level_one_candidates() {
    let s = load("fig3.toml");
    let net = Network::prepare(&s, HierarchyOptions::default()).unwrap();
    let idle = net.model.all_unoccupied();
    let h = &net.hierarchy.states[idle];
    assert_eq!(h.levels[0], vec![NodeId(1), NodeId(2), NodeId(3), NodeId(4)]);
    for src in 1..=4 {
        assert_eq!(
            h.candidates_of(NodeId(src)),
            &[NodeId(5), NodeId(6), NodeId(7), NodeId(8)]
        );
    }
    for h in &net.hierarchy.states {
        h.check(&s.source_ids(), &s.cpc_ids()).unwrap();
    }
}

#[test]
fn occupied_pu_removes_relays_inside_its_footprint() {
    let s = load("fig3.toml");
    let net = Network::prepare(&s, HierarchyOptions::default()).unwrap();
    let m = &net.model;
    let pu1_busy = m.encode(&[m.occupied[0], 1 - m.occupied[1]]);
    let h = &net.hierarchy.states[pu1_busy];
    assert!(h.blocked.contains(&NodeId(6)));
    assert!(!h.level_of.contains_key(&NodeId(6)));
    for cands in h.candidates.values() {
        assert!(!cands.contains(&NodeId(6)));
    }
    let idle = &net.hierarchy.states[m.all_unoccupied()];
    assert!(idle.level_of.contains_key(&NodeId(6)));
}

#[test]
fn hierarchy_partitions_admitted_nodes() {
    let s = load("fig3.toml");
    let net = Network::prepare(&s, HierarchyOptions::default()).unwrap();
    for h in &net.hierarchy.states {
        let total: usize = h.levels.iter().map(Vec::len).sum();
        let distinct: BTreeSet<NodeId> = h.admitted().collect();
        assert_eq!(total, distinct.len());
        assert_eq!(distinct.len(), h.level_of.len());
        let last = h.levels.len();
        for id in &h.levels[last - 1] {
            assert_eq!(h.candidates_of(*id), s.cpc_ids().as_slice());
        }
    }
}

#[test]
fn assign_levels_agrees_with_build_hierarchy() {
    let s = load("fig3.toml");
    let model = build_state_model(&s.pus).unwrap();
    let axis = compute_medial_axis(&s).unwrap();
    let corridor = Corridor::new(axis, &s.pus, s.game.omega).unwrap();
    let all = build_hierarchy(&s, &corridor, &model, HierarchyOptions::default()).unwrap();
    for st in 0..model.num_states() {
        let one = assign_levels(&s, &corridor, &model, st, HierarchyOptions::default()).unwrap();
        assert_eq!(&one, all.state(st));
    }
}

#[test]
fn unreachable_source_is_reported_or_dropped() {
    let mut s = load("fig3.toml");
    s.nodes.sources.push(Node::new(40, 0.9, -0.95));
    let err = Network::prepare(&s, HierarchyOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Unreachable(_)), "{err}");
    let net = Network::prepare(&s, HierarchyOptions { drop_unreachable_sources: true }).unwrap();
    for h in &net.hierarchy.states {
        assert!(h.dropped_sources.contains(&NodeId(40)));
        h.check(&s.source_ids(), &s.cpc_ids()).unwrap();
    }
}
