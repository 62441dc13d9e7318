//! With diffuse priors the min policy is its own best response: the margin
//! F has the sign of y2 - y1 and the solver returns a2 = -1, tau = 0.

use mtgg::equilibrium::{solve_affine_bne, SolveConfig};
use mtgg::policy::{diffuse_f, GameParams, Observation};

fn main() -> mtgg::Result<()> {
    let params = GameParams::diffuse(1.0, 1.0, 10, 4)?;
    for (y1, y2) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (-3.0, 5.0)] {
        let f = diffuse_f(&params, &Observation::new(y1, y2))?;
        println!("F({y1}, {y2}) = {f:+.6}");
    }
    let r = solve_affine_bne(&params, &SolveConfig::default())?;
    println!(
        "solved: a2 = {:.6}, tau = {:.2e}, {} iterations",
        r.a2_star, r.tau_star, r.iterations
    );
    Ok(())
}
