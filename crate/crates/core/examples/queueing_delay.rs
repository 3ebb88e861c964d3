//! Pollaczek-Khinchine delay against a Lindley-recursion simulation for
//! exponential and deterministic service.
//!
//! cargo run --release --example queueing_delay

use cpc_routing::queueing::{pk_delay, QueueParams};
use cpc_routing::rng::{rng, uniform};

fn simulate(lambda: f64, mean: f64, exponential: bool, n: usize) -> f64 {
    let mut r = rng(11);
    let (mut wait, mut total) = (0.0f64, 0.0);
    for _ in 0..n {
        let s = if exponential { -mean * (1.0 - uniform(&mut r)).ln() } else { mean };
        total += wait + s;
        let gap = -(1.0 - uniform(&mut r)).ln() / lambda;
        wait = (wait + s - gap).max(0.0);
    }
    total / n as f64
}

fn main() -> anyhow::Result<()> {
    let mean = 0.1;
    println!("{:>5} {:>13} {:>10} {:>10}", "rho", "service", "formula", "simulated");
    for rho in [0.3, 0.5, 0.8] {
        let lambda = rho / mean;
        for (name, q, exp) in [
            ("exponential", QueueParams::exponential(lambda, mean), true),
            ("deterministic", QueueParams::deterministic(lambda, mean), false),
        ] {
            let d = pk_delay(&q)?;
            let sim = simulate(lambda, mean, exp, 1_000_000);
            println!("{rho:>5} {name:>13} {d:>10.5} {sim:>10.5}");
        }
    }
    Ok(())
}
