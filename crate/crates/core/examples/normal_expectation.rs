//! E[Phi(c - W)] for W ~ N(0, v): closed form next to Monte Carlo.

use mtgg::math::{expected_cdf_shift, mc_expected_cdf_shift, McConfig};

fn main() -> mtgg::Result<()> {
    let cfg = McConfig::new(1_000_000, 42)?;
    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>10}",
        "c", "v", "closed", "sampled", "se"
    );
    for (c, v) in [(0.0, 1.0), (1.0, 1.0), (-0.5, 4.0), (2.0, 0.25)] {
        let exact = expected_cdf_shift(c, v)?;
        let est = mc_expected_cdf_shift(c, v, cfg)?;
        println!(
            "{c:>6} {v:>6} {exact:>12.8} {:>12.8} {:>10.2e}",
            est.mean,
            est.se()
        );
    }
    Ok(())
}
