use std::collections::BTreeSet;

use super::{footprint_clearance, MedialAxis, Projection};
use crate::scenario::{NodeSet, Point, PrimaryUser};
use crate::{Error, NodeId, Result};

/// Relaxed area around the medial axis.
///
/// A point belongs to the corridor when its distance to the axis is at most
/// `(1 + ω)` times the clearance `r` of its nearest axis point, `r` being the
/// distance from that axis point to the closest PU footprint edge.
#[derive(Clone, Debug)]
pub struct Corridor {
    pub axis: MedialAxis,
    pub omega: f64,
    pus: Vec<PrimaryUser>,
}

impl Corridor {
    pub fn new(axis: MedialAxis, pus: &[PrimaryUser], omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::Validation("omega must lie in (0,1]".into()));
        }
        Ok(Corridor {
            axis,
            omega,
            pus: pus.to_vec(),
        })
    }

    /// Admissible radius `r` at an axis point.
    pub fn radius_at(&self, axis_point: &Point) -> f64 {
        footprint_clearance(&self.pus, axis_point).max(0.0)
    }

    pub fn project(&self, p: &Point) -> Projection {
        self.axis.project(p)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let proj = self.axis.project(p);
        proj.distance <= self.radius_at(&proj.point) * (1.0 + self.omega)
    }

    /// Sources and relays inside the corridor.
    pub fn members(&self, nodes: &NodeSet) -> BTreeSet<NodeId> {
        nodes
            .su_nodes()
            .filter(|n| self.contains(&n.pos))
            .map(|n| n.id)
            .collect()
    }
}

/// Ids of the SU nodes in the relaxed area around `axis`.
pub fn corridor_members(
    axis: &MedialAxis,
    pus: &[PrimaryUser],
    nodes: &NodeSet,
    omega: f64,
) -> Result<BTreeSet<NodeId>> {
    Ok(Corridor::new(axis.clone(), pus, omega)?.members(nodes))
}
