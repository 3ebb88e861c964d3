//! Re-solving after new PU information: an unchanged map keeps the cached
//! solution, a wider footprint rebuilds the corridor.
//!
//! cargo run --example map_update

use cpc_routing::runner::Session;
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.toml"))?;
    let mut session = Session::new(scenario.clone());
    let members = session.solve()?.0.corridor.members(&scenario.nodes).len();
    println!("initial corridor: {members} nodes");

    let changed = session.update_map(&scenario.pus)?;
    println!("same PUs again: changed = {changed}, stale = {}", session.is_stale());

    let mut pu = scenario.pus[0].clone();
    pu.footprint_radius *= 1.3;
    let changed = session.update_map(&[pu])?;
    println!("PU {} radius x1.3: changed = {changed}, stale = {}", scenario.pus[0].id, session.is_stale());
    let (net, sol) = session.solve()?;
    println!(
        "new corridor: {} nodes, {} levels, {} strategies",
        net.corridor.members(&net.scenario.nodes).len(),
        sol.level_count,
        sol.strategies.len()
    );
    Ok(())
}
