//! Scalar Gaussian machinery.
//!
//! Everything the solver needs reduces to the standard normal CDF and one
//! identity: for `W ~ N(0, v)` independent of everything else,
//!
//! ```text
//! E[Phi(c - W)] = P(X + W <= c) = Phi(c / sqrt(1 + v)),   X ~ N(0, 1)
//! ```
//!
//! The Monte Carlo estimator [`mc_expected_cdf_shift`] samples the left-hand
//! side directly and exists to keep that reduction honest.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, BLOCK_SIZE};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF without input validation. Saturates to 0 or 1.
#[inline]
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, computed through `erfc` so both tails keep full
/// relative precision.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!(
            "std_normal_cdf: non-finite input {x}"
        )));
    }
    Ok(phi(x))
}

/// A scalar Gaussian `N(mean, variance)`. Zero variance is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianScalar {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianScalar {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::Domain(format!(
                "invalid Gaussian N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.std_dev() * z
    }
}

/// Shrinkage gain and posterior variance of `Theta | Y = y` for one task.
///
/// With prior `N(0, s)` and noise `N(0, a)`, the posterior is
/// `N(d * y, sigma_tilde_sq)` where `d = s / (s + a)` and
/// `sigma_tilde_sq = a * s / (s + a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub d: f64,
    pub sigma_tilde_sq: f64,
}

impl PosteriorParams {
    pub fn posterior(&self, y: f64) -> GaussianScalar {
        GaussianScalar {
            mean: self.d * y,
            variance: self.sigma_tilde_sq,
        }
    }
}

/// Posterior parameters for one task. A diffuse prior is the exact limit
/// `d = 1`, `sigma_tilde_sq = noise_var`, and `prior_var` is ignored.
pub fn posterior_params(prior_var: f64, noise_var: f64, diffuse: bool) -> Result<PosteriorParams> {
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::Domain(format!(
            "noise variance must be positive and finite, got {noise_var}"
        )));
    }
    if diffuse {
        return Ok(PosteriorParams {
            d: 1.0,
            sigma_tilde_sq: noise_var,
        });
    }
    if !(prior_var > 0.0) || !prior_var.is_finite() {
        return Err(Error::Domain(format!(
            "prior variance must be positive and finite, got {prior_var}"
        )));
    }
    let total = prior_var + noise_var;
    Ok(PosteriorParams {
        d: prior_var / total,
        sigma_tilde_sq: noise_var * prior_var / total,
    })
}

/// `E[Phi(c - W)]` for `W ~ N(0, w_var)`, in closed form.
pub fn expected_cdf_shift(c: f64, w_var: f64) -> Result<f64> {
    check_shift_args(c, w_var)?;
    Ok(phi(c / (1.0 + w_var).sqrt()))
}

fn check_shift_args(c: f64, w_var: f64) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("shift must be finite, got {c}")));
    }
    if !(w_var >= 0.0) || !w_var.is_finite() {
        return Err(Error::Domain(format!(
            "variance must be non-negative and finite, got {w_var}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub sample_count: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(sample_count: u64, seed: u64) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::Domain("sample_count must be at least 1".into()));
        }
        Ok(Self { sample_count, seed })
    }
}

/// A sample mean and its standard error. `std_err` is `None` when fewer
/// than two samples were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: Option<f64>,
}

impl Estimate {
    /// Standard error, or `+inf` for single-sample estimates.
    pub fn se(&self) -> f64 {
        self.std_err.unwrap_or(f64::INFINITY)
    }

    /// `|mean - target| <= k * se`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se()
    }
}

/// Welford accumulator with an exact-order merge, so block-wise parallel
/// reductions match a sequential pass over the same blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> Option<f64> {
        (self.n > 1).then(|| self.m2 / (self.n - 1) as f64)
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_err: self.variance().map(|v| (v / self.n as f64).sqrt()),
        }
    }
}

/// Runs `per_sample` over `cfg.sample_count` draws split into fixed-size
/// blocks, each with its own RNG stream. Blocks run in parallel and are
/// merged in order.
pub fn mc_mean<F>(cfg: McConfig, per_sample: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = cfg.sample_count.div_ceil(BLOCK_SIZE);
    let parts: Vec<Accumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(cfg.seed, b);
            let len = BLOCK_SIZE.min(cfg.sample_count - b * BLOCK_SIZE);
            let mut acc = Accumulator::default();
            for _ in 0..len {
                acc.push(per_sample(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    for p in &parts {
        total.merge(p);
    }
    total.estimate()
}

/// Monte Carlo estimate of `E[Phi(c - W)]`, `W ~ N(0, w_var)`.
pub fn mc_expected_cdf_shift(c: f64, w_var: f64, cfg: McConfig) -> Result<Estimate> {
    check_shift_args(c, w_var)?;
    McConfig::new(cfg.sample_count, cfg.seed)?;
    let sd = w_var.sqrt();
    Ok(mc_mean(cfg, |rng| {
        let z: f64 = rng.sample(StandardNormal);
        phi(c - sd * z)
    }))
}
