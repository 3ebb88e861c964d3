//! Discounted values over a PU state chain: the direct solve next to value
//! iteration.
//!
//! cargo run --example markov_values -- [beta]

use cpc_routing::dynprog::solve_markov_values;
use cpc_routing::scenario::build_state_model;
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let beta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.9);
    let scenario = Scenario::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig3.toml"))?;
    let model = build_state_model(&scenario.pus)?;
    let p = &model.transition;
    // stage cost: one unit for every occupied channel
    let r: Vec<f64> = (0..model.num_states())
        .map(|s| (0..scenario.pus.len()).filter(|&k| model.is_occupied(s, k)).count() as f64)
        .collect();

    let v = solve_markov_values(&r, p, beta)?;
    let mut vi = r.clone();
    let mut iters = 0;
    loop {
        let next: Vec<f64> = (0..r.len())
            .map(|i| r[i] + beta * (0..r.len()).map(|j| p[i][j] * vi[j]).sum::<f64>())
            .collect();
        let diff = next.iter().zip(&vi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        vi = next;
        iters += 1;
        if diff < 1e-13 {
            break;
        }
    }
    println!("{:<26} {:>6} {:>12} {:>12}", "state", "pi", "direct", "iterated");
    for s in 0..r.len() {
        println!(
            "{:<26} {:>6.3} {:>12.8} {:>12.8}",
            model.state_label(s),
            model.stationary[s],
            v[s],
            vi[s]
        );
    }
    println!("value iteration took {iters} sweeps");
    Ok(())
}
