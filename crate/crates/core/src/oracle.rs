//! Sampling oracles that bypass the closed-form reductions.
//!
//! [`mc_belief`] estimates a neighbor's probability of choosing task 1 the
//! long way round: draw the difficulties from this agent's posterior, draw
//! the neighbor's signals around them, and apply the neighbor's policy.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::math::{mc_mean, Estimate, McConfig};
use crate::policy::{Action, AffinePolicy, GameParams, Observation};

pub fn mc_belief(
    params: &GameParams,
    neighbor: &AffinePolicy,
    y: &Observation,
    cfg: McConfig,
) -> Result<Estimate> {
    McConfig::new(cfg.sample_count, cfg.seed)?;
    let (post1, post2) = params.posteriors()?;
    let (m1, m2) = (post1.d * y.y1, post2.d * y.y2);
    let (s1, s2) = (post1.sigma_tilde_sq.sqrt(), post2.sigma_tilde_sq.sqrt());
    let (n1, n2) = (params.alpha1_sq.sqrt(), params.alpha2_sq.sqrt());
    let neighbor = *neighbor;
    Ok(mc_mean(cfg, move |rng| {
        let z: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let theta1 = m1 + s1 * z[0];
        let theta2 = m2 + s2 * z[1];
        let seen = Observation::new(theta1 + n1 * z[2], theta2 + n2 * z[3]);
        match neighbor.apply(&seen) {
            Action::Task1 => 1.0,
            Action::Task2 => 0.0,
        }
    }))
}
