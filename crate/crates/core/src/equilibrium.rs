//! Data-driven affine equilibria.
//!
//! Starting from a homogeneous profile `(1, a2, tau)`, each round computes
//! the best-response switching curve `g` at a fixed sample of `y2` values
//! and refits the profile by ordinary least squares of `g(y2)` on
//! `(y2, 1)`. The profile's decision boundary is `y1 = -a2*y2 + tau`, so the
//! fitted slope maps to `-a2` and the intercept to `tau`. A fixed point of
//! this map is an approximate affine Bayesian Nash equilibrium.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{AffinePolicy, GameParams, SwitchingFunction, ROOT_TOL};
use crate::rng::stream_rng;

/// Proposal variance multiplier for diffuse instances, where the marginal
/// of `Y2` is improper: samples come from `N(0, DIFFUSE_PROPOSAL * alpha2^2)`.
pub const DIFFUSE_PROPOSAL: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSample {
    pub y2: f64,
    pub g_of_y2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub sample_count: usize,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub seed: u64,
    pub init_a2: f64,
    pub init_tau: f64,
    /// Update `x <- x + relaxation * (fit - x)`; 1 is the plain iteration.
    pub relaxation: f64,
    pub root_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            sample_count: 10_000,
            max_iters: 100,
            conv_tol: 1e-4,
            seed: 0,
            init_a2: -1.0,
            init_tau: 0.0,
            relaxation: 1.0,
            root_tol: ROOT_TOL,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 2 {
            return Err(Error::config(
                "solve.sample_count",
                "need at least 2 samples",
            ));
        }
        if self.max_iters < 1 {
            return Err(Error::config("solve.max_iters", "must be positive"));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::config("solve.conv_tol", "must be positive"));
        }
        if !(self.init_a2 < 0.0) || !self.init_a2.is_finite() {
            return Err(Error::config(
                "solve.init_a2",
                "must be negative and finite",
            ));
        }
        if !self.init_tau.is_finite() {
            return Err(Error::config("solve.init_tau", "must be finite"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::config("solve.relaxation", "must lie in (0, 1]"));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::config("solve.root_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub a2_star: f64,
    pub tau_star: f64,
    /// Mean squared distance between the returned line and the last
    /// computed switching curve over the sample.
    pub residual_error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(a2, tau)` after each round; entry 0 is the initial profile.
    pub trajectory: Vec<(f64, f64)>,
}

impl SolveResult {
    pub fn policy(&self) -> AffinePolicy {
        AffinePolicy {
            a1: 1.0,
            a2: self.a2_star,
            tau: self.tau_star,
        }
    }
}

/// Least-squares line through the switching-curve samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub a2: f64,
    pub tau: f64,
    pub residual: f64,
}

/// `M` draws from the marginal of `Y2 = Theta2 + Z2`.
pub fn sample_y2(params: &GameParams, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::config(
            "solve.sample_count",
            "need at least 2 samples",
        ));
    }
    let var = if params.diffuse {
        DIFFUSE_PROPOSAL * params.alpha2_sq
    } else {
        params.sigma2_sq + params.alpha2_sq
    };
    let sd = var.sqrt();
    let mut rng = stream_rng(seed, 0);
    Ok((0..m)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect())
}

/// Ordinary least squares of `g(y2)` on `(y2, 1)`.
pub fn project_affine(samples: &[ProjectionSample]) -> Result<AffineFit> {
    if samples.len() < 2 {
        return Err(Error::RankDeficient(format!("{} samples", samples.len())));
    }
    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|s| s.y2).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.g_of_y2).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in samples {
        let dx = s.y2 - mean_x;
        sxx += dx * dx;
        sxy += dx * (s.g_of_y2 - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::RankDeficient("all y2 samples are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = mean_squared_residual(samples, slope, intercept);
    Ok(AffineFit {
        slope,
        intercept,
        a2: -slope,
        tau: intercept,
        residual,
    })
}

pub fn mean_squared_residual(samples: &[ProjectionSample], slope: f64, intercept: f64) -> f64 {
    samples
        .iter()
        .map(|s| {
            let e = slope * s.y2 + intercept - s.g_of_y2;
            e * e
        })
        .sum::<f64>()
        / samples.len() as f64
}

/// The switching curve of the best response to `(1, a2, tau)` at each
/// sample, computed in parallel. Errors name the failing sample.
pub fn switching_curve_samples(
    params: &GameParams,
    a2: f64,
    tau: f64,
    ys: &[f64],
    root_tol: f64,
) -> Result<Vec<ProjectionSample>> {
    let profile = AffinePolicy::normalized(a2, tau)?;
    let sf = SwitchingFunction::new(params, &profile)?;
    ys.par_iter()
        .enumerate()
        .map(|(m, &y2)| {
            sf.root(y2, root_tol)
                .map(|(xi, _)| ProjectionSample { y2, g_of_y2: xi })
                .map_err(|e| Error::Solver(format!("sample {m} (y2 = {y2}): {e}")))
        })
        .collect()
}

/// Checks that the curve is non-decreasing in `y2`, up to root tolerance.
fn check_monotone(samples: &[ProjectionSample], order: &[usize], slack: f64) -> Result<()> {
    for w in order.windows(2) {
        let (a, b) = (&samples[w[0]], &samples[w[1]]);
        if b.y2 > a.y2 && b.g_of_y2 < a.g_of_y2 - slack {
            return Err(Error::Invariant(format!(
                "switching curve decreases between y2 = {} and {}",
                a.y2, b.y2
            )));
        }
    }
    Ok(())
}

/// Iterate curve computation and affine projection until the profile moves
/// by at most `conv_tol` in max-norm. Running out of iterations is reported
/// through `converged = false`, not as an error.
pub fn solve_affine_bne(params: &GameParams, cfg: &SolveConfig) -> Result<SolveResult> {
    params.validate()?;
    cfg.validate()?;
    let ys = sample_y2(params, cfg.sample_count, cfg.seed)?;
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&i, &j| ys[i].total_cmp(&ys[j]));

    let (mut a2, mut tau) = (cfg.init_a2, cfg.init_tau);
    let mut trajectory = vec![(a2, tau)];
    let mut residual = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let curve = switching_curve_samples(params, a2, tau, &ys, cfg.root_tol)?;
        if a2 < 0.0 {
            check_monotone(&curve, &order, 4.0 * cfg.root_tol)?;
        }
        let fit = project_affine(&curve)?;
        let next_a2 = a2 + cfg.relaxation * (fit.a2 - a2);
        let next_tau = tau + cfg.relaxation * (fit.tau - tau);
        let change = (next_a2 - a2).abs().max((next_tau - tau).abs());
        a2 = next_a2;
        tau = next_tau;
        trajectory.push((a2, tau));
        residual = mean_squared_residual(&curve, -a2, tau);
        if change <= cfg.conv_tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        a2_star: a2,
        tau_star: tau,
        residual_error: residual,
        iterations,
        converged,
        trajectory,
    })
}
