//! Can one agent do better than the min policy when everyone else plays it?
//! Scores a grid of alternatives plus the exact best response on shared draws.

use mtgg::graph::make_regular_graph;
use mtgg::policy::{min_policy, GameParams};
use mtgg::simulation::{certification_competitors, deviation_gain, homogeneous_profile};

fn main() -> mtgg::Result<()> {
    let params = GameParams::diffuse(1.0, 1.0, 10, 4)?;
    let graph = make_regular_graph(10, 4)?;
    let center = min_policy();
    let comps = certification_competitors(&center, 0.4, 0.5, 9);
    let rep = deviation_gain(
        &params,
        &graph,
        &homogeneous_profile(center, 10),
        0,
        &comps,
        100_000,
        11,
    )?;
    let worst = rep
        .per_competitor
        .iter()
        .map(|e| e.mean)
        .fold(f64::INFINITY, f64::min);
    println!("competitors: {}", comps.len());
    println!(
        "best gain:   {:.3e} +- {:.1e} (#{})",
        rep.gain.mean,
        rep.gain.se(),
        rep.best_competitor
    );
    println!("worst gain:  {worst:.3e}");
    println!("certified at eps = 0: {}", rep.certifies(0.0));
    Ok(())
}
