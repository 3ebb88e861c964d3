//! Global routing structure: the medial axis between PU footprints, the
//! relaxed corridor around it and the per-state hierarchy of levels.

mod axis;
mod corridor;
mod hierarchy;

pub use axis::{compute_medial_axis, MedialAxis, Projection};
pub use corridor::{corridor_members, Corridor};
pub use hierarchy::{
    assign_levels, build_hierarchy, level_count, HierarchyAssignment, HierarchyOptions,
    StateHierarchy,
};

use crate::scenario::{Point, PrimaryUser};

/// Signed distance from `p` to the nearest footprint edge (negative inside).
pub fn footprint_clearance(pus: &[PrimaryUser], p: &Point) -> f64 {
    pus.iter()
        .map(|pu| pu.center.dist(p) - pu.footprint_radius)
        .fold(f64::INFINITY, f64::min)
}

/// Strongest PU power perceived at `p`, `tx · max(d, d_min)^-α`.
pub fn perceived_power(pus: &[PrimaryUser], p: &Point, alpha: f64, d_min: f64) -> f64 {
    pus.iter()
        .map(|pu| pu.tx_power * pu.center.dist(p).max(d_min).powf(-alpha))
        .fold(0.0, f64::max)
}
