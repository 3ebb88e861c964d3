//! Solves the two-PU example and prints every node's mixed strategy and
//! discounted value at the state where both channels are idle.
//!
//! cargo run --example fig3_equilibrium

use cpc_routing::runner;
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.toml"))?;
    let (net, sol) = runner::solve(&scenario)?;
    let idle = net.model.all_unoccupied();
    let h = &net.hierarchy.states[idle];
    println!("{} levels at state {}", sol.level_count, net.model.state_label(idle));
    for (l, level) in h.levels.iter().enumerate() {
        println!("level {}", l + 1);
        for &node in level {
            let e = sol.strategies.get(node, idle).expect("admitted node has a strategy");
            let mix: Vec<String> = e
                .candidates
                .iter()
                .zip(&e.strategy.probs)
                .filter(|(_, &p)| p > 1e-6)
                .map(|(c, p)| format!("{c}:{p:.3}"))
                .collect();
            let v = sol.values.value(node, idle).unwrap_or(f64::NAN);
            println!("  {node:>4}  v = {v:.4}  -> {}", mix.join(" "));
        }
    }
    let worst = sol.audit.iter().map(|a| a.relative_gap).fold(0.0, f64::max);
    println!("worst relative Nash gap over all stage games: {worst:.2e}");
    Ok(())
}
