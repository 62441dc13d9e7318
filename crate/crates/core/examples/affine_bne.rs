//! Iterated affine projection of the best response across graph densities.
//!
//!     cargo run --release --example affine_bne -- 0.2 0.5 0.8

use mtgg::equilibrium::{solve_affine_bne, SolveConfig};
use mtgg::policy::GameParams;

fn main() -> mtgg::Result<()> {
    let mut rhos: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    if rhos.is_empty() {
        rhos = vec![0.1, 0.4, 0.9];
    }
    let base = GameParams::new(2.0, 1.0, 1.0, 1.0, 10, 1)?;
    let cfg = SolveConfig {
        seed: 1,
        ..SolveConfig::default()
    };
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>5}",
        "rho", "a2*", "tau*", "resid", "iters"
    );
    for rho in rhos {
        let r = solve_affine_bne(&base.with_rho(rho)?, &cfg)?;
        println!(
            "{rho:>5} {:>10.4} {:>10.4} {:>10.2e} {:>5}{}",
            r.a2_star,
            r.tau_star,
            r.residual_error,
            r.iterations,
            if r.converged { "" } else { "  (not converged)" }
        );
    }
    Ok(())
}
