//! Fictitious play on a level-1 stage game of the two-PU example. Prints how
//! far the empirical frequencies still move within the stopping window.
//!
//! cargo run --example fp_convergence -- [level]

use cpc_routing::dynprog::stage_game_of;
use cpc_routing::runner;
use cpc_routing::stagegame::{fictitious_play, nash_gaps, FpOptions};
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let level: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let scenario = Scenario::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.toml"))?;
    let (net, sol) = runner::solve(&scenario)?;
    let state = net.model.all_unoccupied();
    let game = stage_game_of(&net.scenario, &net.hierarchy, &sol, state, level)?;

    let opts = FpOptions {
        record: true,
        max_iters: 2000,
        stop_tol: 0.0,
        ..FpOptions::from_config(&scenario.game)
    };
    let (profile, trace) = fictitious_play(&game, &opts);
    println!("players {:?}", game.players);
    for &(k, change) in trace.window_changes.iter().filter(|(k, _)| k.is_power_of_two() || k % 250 == 0) {
        println!("iteration {k:>5}  window change {change:.2e}");
    }
    println!("first iteration with change < 0.01: {:?}", trace.first_stable(0.01));
    println!("Nash gaps of the returned profile: {:?}", nash_gaps(&game, &profile)?);
    Ok(())
}
