//! Game routing against Dijkstra and medial-axis routing on the scaled
//! 300-node field. Prints the normalized median interference and delay per
//! distance bin.
//!
//! cargo run --release --example compare_baselines -- [n_seeds] [config]

use std::time::Instant;

use cpc_routing::metrics::{bins_at_most, ensemble_compare, Algorithm, Metric};
use cpc_routing::Scenario;

fn main() -> anyhow::Result<()> {
    let n_seeds: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let default = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/fig5_scaled.toml");
    let path = std::env::args().nth(2).unwrap_or_else(|| default.to_string());
    let scenario = Scenario::from_path(path)?;

    let t = Instant::now();
    let cmp = ensemble_compare(&scenario, &Algorithm::ALL, n_seeds)?;
    println!(
        "{} seeds in {:.1?}: {} samples, {} dropped sources, failed seeds {:?}",
        n_seeds,
        t.elapsed(),
        cmp.samples.len(),
        cmp.dropped,
        cmp.failed_seeds
    );
    for metric in [Metric::Interference, Metric::Delay] {
        println!("\n{metric:?} (median per bin)");
        let report = cmp.report(metric);
        for b in 0..report[0].bins.len() {
            print!("{:>6.3} km", report[0].bins[b].center);
            for r in report {
                let s = r.bins[b];
                print!("  {:>8} {:.4} (n={:>3})", r.algorithm.name(), s.median, s.n);
            }
            println!();
        }
    }
    let interference = bins_at_most(&cmp.interference, Algorithm::Game, Algorithm::Dijkstra);
    let delay = bins_at_most(&cmp.delay, Algorithm::Game, Algorithm::Ma);
    println!("\ngame <= dijkstra interference in {interference}/10 bins");
    println!("game <= ma delay in {delay}/10 bins");
    Ok(())
}
