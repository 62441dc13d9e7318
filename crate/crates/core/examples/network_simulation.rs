//! Everyone plays the min policy on a circulant graph; coordination falls
//! off as the signals get noisier.

use mtgg::graph::make_regular_graph;
use mtgg::policy::{min_policy, GameParams};
use mtgg::simulation::noise_sweep;

fn main() -> mtgg::Result<()> {
    let params = GameParams::new(1.0, 1.0, 1.0, 1.0, 10, 4)?;
    let graph = make_regular_graph(10, 4)?;
    let sweep = noise_sweep(
        &params,
        &graph,
        min_policy(),
        &[0.01, 0.1, 1.0, 10.0, 100.0],
        10_000,
        3,
    )?;
    println!("{:>8} {:>14} {:>10}", "alpha^2", "coordination", "payoff");
    for (v, r) in sweep {
        println!(
            "{v:>8} {:>8.4} +- {:.3} {:>10.4}",
            r.coordination_rate.mean,
            r.coordination_rate.se(),
            r.mean_payoff_per_agent.mean
        );
    }
    Ok(())
}
