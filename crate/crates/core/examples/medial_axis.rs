//! Medial axis, corridor and level bands of a scenario.
//!
//! cargo run --example medial_axis -- [config] [omega]

use cpc_routing::geometry::{compute_medial_axis, corridor_members};
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let default = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.toml");
    let path = std::env::args().nth(1).unwrap_or_else(|| default.to_string());
    let scenario = Scenario::from_path(path)?;
    let omega: f64 = std::env::args()
        .nth(2)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(scenario.game.omega);

    let axis = compute_medial_axis(&scenario)?;
    println!("axis: {} points, length {:.3} km", axis.points.len(), axis.length());
    let step = (axis.points.len() / 10).max(1);
    for p in axis.points.iter().step_by(step) {
        println!("  ({:+.3}, {:+.3})", p.x, p.y);
    }
    for w in [0.1, 0.4, omega, 1.0] {
        let members = corridor_members(&axis, &scenario.pus, &scenario.nodes, w)?;
        println!("omega {w:.2}: {} corridor nodes", members.len());
    }
    Ok(())
}
