//! The best-response boundary against the profile (1, -2, 0) with
//! sigma1^2 = 1, sigma2^2 = 2, unit noise, N = 10, K = 4. The curve is
//! increasing but not a straight line.

use mtgg::policy::{AffinePolicy, GameParams, SwitchingFunction, ROOT_TOL};

fn main() -> mtgg::Result<()> {
    let params = GameParams::new(1.0, 2.0, 1.0, 1.0, 10, 4)?;
    let sf = SwitchingFunction::new(&params, &AffinePolicy::new(1.0, -2.0, 0.0)?)?;
    println!("{:>8} {:>12} {:>10}", "y2", "g(y2)", "g'(y2)");
    for i in 0..=8 {
        let y2 = -20.0 + 5.0 * i as f64;
        let (g, _) = sf.root(y2, ROOT_TOL)?;
        println!("{y2:>8.1} {g:>12.6} {:>10.6}", sf.slope_at(g, y2)?);
    }
    for y2 in [-1e3, 1e3] {
        println!("slope at {y2}: {:.6}", sf.slope(y2, ROOT_TOL)?);
    }
    Ok(())
}
