//! Self-checks of the solver against independent computations.
//!
//! Each check reports what it measured next to the tolerance it was held
//! to. `margin = tolerance - observed`, so a negative margin is a failure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::graph::make_regular_graph;
use crate::math::{expected_cdf_shift, mc_expected_cdf_shift, McConfig};
use crate::oracle::mc_belief;
use crate::policy::{
    belief, br_lhs_minus_rhs, diffuse_f, min_policy, AffinePolicy, BeliefContext, GameParams,
    Observation, SwitchingFunction, ROOT_TOL,
};
use crate::rng::stream_rng;
use crate::simulation::{certification_competitors, deviation_gain, homogeneous_profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
    pub margin: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, observed: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: observed <= tolerance,
            observed,
            tolerance,
            margin: tolerance - observed,
            detail,
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            observed: f64::NAN,
            tolerance: f64::NAN,
            margin: f64::NAN,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: observed {:.3e}, tolerance {:.3e}, {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

fn z_score(est: f64, target: f64, se: f64) -> f64 {
    let d = (est - target).abs();
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

fn or_fail(name: &str, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome::failed(name, e.to_string()))
}

/// `E[Phi(W)] = 1/2` for `W ~ N(0, 1)`, both in closed form and by sampling;
/// then the belief computed from `ctx` at shifts `c = -1, 1` against sampling
/// `Phi(c - W)` with `W` at its true variance `true_w_var`.
///
/// Observed value is the worst z-score over the sampled comparisons; the
/// closed-form identity must hold to 1e-12 outright.
pub fn check_normal_expectation(
    ctx: &BeliefContext,
    true_w_var: f64,
    samples: u64,
    seed: u64,
) -> CheckOutcome {
    const NAME: &str = "normal-expectation";
    or_fail(
        NAME,
        (|| {
            let exact = expected_cdf_shift(0.0, 1.0)?;
            if (exact - 0.5).abs() > 1e-12 {
                return Ok(CheckOutcome::new(
                    NAME,
                    f64::INFINITY,
                    3.0,
                    format!("closed form gives {exact}"),
                ));
            }
            let mc = mc_expected_cdf_shift(0.0, 1.0, McConfig::new(samples, seed)?)?;
            let mut worst = z_score(mc.mean, 0.5, mc.se());
            let mut detail = format!("E[Phi(W)] ~ {:.6} +- {:.1e}", mc.mean, mc.se());
            let p = ctx.neighbor;
            for (i, c) in [-1.0, 1.0].into_iter().enumerate() {
                // Observation on the y2 = 0 line whose shift is exactly c.
                let y1 = (p.tau - c * noise_sd(ctx)) / (ctx.post1.d * p.a1);
                let y = Observation::new(y1, 0.0);
                let c = ctx.shift(&y);
                let closed = belief(ctx, &y)?;
                let mc = mc_expected_cdf_shift(
                    c,
                    true_w_var,
                    McConfig::new(samples, seed.wrapping_add(1 + i as u64))?,
                )?;
                let z = z_score(mc.mean, closed, mc.se());
                detail.push_str(&format!(
                    "; belief at c={c:.3}: {closed:.6} vs {:.6}",
                    mc.mean
                ));
                worst = worst.max(z);
            }
            Ok(CheckOutcome::new(NAME, worst, 3.0, detail))
        })(),
    )
}

fn noise_sd(ctx: &BeliefContext) -> f64 {
    let (a1, a2) = (ctx.neighbor.a1, ctx.neighbor.a2);
    (a1 * a1 * ctx.alpha1_sq + a2 * a2 * ctx.alpha2_sq).sqrt()
}

/// Variance of `W` computed directly from the posteriors.
pub fn true_w_var(params: &GameParams, neighbor: &AffinePolicy) -> Result<f64> {
    if params.diffuse {
        return Ok(1.0);
    }
    let (p1, p2) = params.posteriors()?;
    let (a1, a2) = (neighbor.a1, neighbor.a2);
    Ok((a1 * a1 * p1.sigma_tilde_sq + a2 * a2 * p2.sigma_tilde_sq)
        / (a1 * a1 * params.alpha1_sq + a2 * a2 * params.alpha2_sq))
}

/// In a diffuse instance against min-policy neighbors: `F` vanishes on the
/// diagonal and has the sign of `y2 - y1` off it, and agrees with the full
/// best-response margin divided by `K`.
pub fn check_diffuse_sign(
    params: &GameParams,
    diagonal: usize,
    off_diagonal: usize,
    seed: u64,
) -> CheckOutcome {
    const NAME: &str = "diffuse-sign-structure";
    or_fail(
        NAME,
        (|| {
            let mut rng = stream_rng(seed, 0);
            let mut worst_diag: f64 = 0.0;
            for _ in 0..diagonal {
                let u = rng.random_range(-50.0..50.0);
                worst_diag = worst_diag.max(diffuse_f(params, &Observation::new(u, u))?.abs());
            }
            let k = params.degree as f64;
            let mut sign_errors = 0;
            let mut worst_br: f64 = 0.0;
            let mut done = 0;
            while done < off_diagonal {
                let y =
                    Observation::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
                if y.y1 == y.y2 {
                    continue;
                }
                done += 1;
                let f = diffuse_f(params, &y)?;
                if f.signum() != (y.y2 - y.y1).signum() || f == 0.0 {
                    sign_errors += 1;
                }
                let br = br_lhs_minus_rhs(params, &min_policy(), &y)? / k;
                worst_br = worst_br.max((br - f).abs() / f.abs().max(1.0));
            }
            let observed = if sign_errors > 0 || worst_br > 1e-9 {
                f64::INFINITY
            } else {
                worst_diag
            };
            Ok(CheckOutcome::new(
            NAME,
            observed,
            1e-12,
            format!(
                "max |F| on diagonal {worst_diag:.1e}; {sign_errors} sign errors in {off_diagonal}; \
                 max rel gap to BR margin {worst_br:.1e}"
            ),
        ))
        })(),
    )
}

/// A random game with `n = 10` and a random monotone profile.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<(GameParams, AffinePolicy)> {
    let params = GameParams::new(
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..5.0),
        10,
        rng.random_range(1..10),
    )?;
    let profile = AffinePolicy::new(
        rng.random_range(0.5..2.0),
        rng.random_range(-2.0..-0.2),
        rng.random_range(-2.0..2.0),
    )?;
    Ok((params, profile))
}

/// Switching curve of one instance at `points` evenly spaced `y2` in
/// `[-20, 20]`: strictly increasing, and the analytic slope within `1e-5`
/// relative of a central difference. Returns the worst relative slope gap,
/// or infinity when monotonicity fails.
pub fn monotonicity_gap(params: &GameParams, profile: &AffinePolicy, points: usize) -> Result<f64> {
    let sf = SwitchingFunction::new(params, profile)?;
    let h = 1e-4;
    let mut prev = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let y2 = -20.0 + 40.0 * i as f64 / (points - 1) as f64;
        let (xi, _) = sf.root(y2, ROOT_TOL)?;
        if !(xi > prev) {
            return Ok(f64::INFINITY);
        }
        prev = xi;
        let s = sf.slope_at(xi, y2)?;
        let up = sf.root(y2 + h, 1e-15)?.0;
        let dn = sf.root(y2 - h, 1e-15)?.0;
        let fd = (up - dn) / (2.0 * h);
        worst = worst.max(((s - fd) / fd).abs());
    }
    Ok(worst)
}

pub fn check_monotonicity(
    params: &GameParams,
    profile: &AffinePolicy,
    random_instances: usize,
    seed: u64,
) -> CheckOutcome {
    const NAME: &str = "switching-curve-monotone";
    or_fail(
        NAME,
        (|| {
            let mut worst = monotonicity_gap(params, profile, 100)?;
            let mut rng = stream_rng(seed, 1);
            for _ in 0..random_instances {
                let (p, prof) = random_instance(&mut rng)?;
                worst = worst.max(monotonicity_gap(&p, &prof, 100)?);
            }
            Ok(CheckOutcome::new(
                NAME,
                worst,
                1e-5,
                format!(
                    "{} instances x 100 points; worst relative slope error {worst:.1e}",
                    random_instances + 1
                ),
            ))
        })(),
    )
}

/// Closed-form belief against two-stage sampling at random parameter points.
/// Observed value is the worst z-score.
pub fn check_oracle(points: usize, samples: u64, seed: u64) -> CheckOutcome {
    const NAME: &str = "belief-oracle";
    or_fail(
        NAME,
        (|| {
            let mut rng = stream_rng(seed, 2);
            let mut worst: f64 = 0.0;
            for i in 0..points {
                let (params, neighbor) = random_instance(&mut rng)?;
                let y = Observation::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let exact = belief(&BeliefContext::new(&params, neighbor)?, &y)?;
                let est = mc_belief(
                    &params,
                    &neighbor,
                    &y,
                    McConfig::new(samples, seed.wrapping_add(100 + i as u64))?,
                )?;
                worst = worst.max(z_score(est.mean, exact, est.se()));
            }
            Ok(CheckOutcome::new(
                NAME,
                worst,
                4.0,
                format!("{points} points at {samples} samples"),
            ))
        })(),
    )
}

/// Unilateral deviation from the min-policy profile in a diffuse game:
/// 9x9 perturbations plus the exact best response. Observed value is the
/// best gain in standard errors (0 when the gain is exactly zero).
pub fn check_deviation(params: &GameParams, trials: u64, seed: u64) -> CheckOutcome {
    const NAME: &str = "min-policy-deviation";
    or_fail(
        NAME,
        (|| {
            let graph = make_regular_graph(params.n_agents, params.degree)?;
            let center = min_policy();
            let competitors = certification_competitors(&center, 0.4, 0.5, 9);
            let profile = homogeneous_profile(center, params.n_agents);
            let rep = deviation_gain(params, &graph, &profile, 0, &competitors, trials, seed)?;
            let g = rep.gain;
            let observed = if g.mean <= 0.0 { 0.0 } else { g.mean / g.se() };
            Ok(CheckOutcome::new(
                NAME,
                observed,
                3.0,
                format!(
                    "best gain {:.3e} +- {:.1e} over {} competitors at {trials} trials",
                    g.mean,
                    g.se(),
                    competitors.len()
                ),
            ))
        })(),
    )
}

/// Runs every check. Sign structure and the deviation test always use the
/// diffuse version of the configured game.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let params = cfg.params()?;
    let v = &cfg.verify;
    let diffuse = GameParams::diffuse(
        params.alpha1_sq,
        params.alpha2_sq,
        params.n_agents,
        params.degree,
    )?;
    let profile = cfg.curve.profile.policy("curve.profile")?;

    let mut ctx = BeliefContext::new(&params, profile)?;
    if let Some(w) = v.corrupt_w_var {
        ctx = ctx.with_w_var(w);
    }
    let checks = vec![
        check_normal_expectation(&ctx, true_w_var(&params, &profile)?, v.mc_samples, v.seed),
        check_diffuse_sign(&diffuse, 100, 1000, v.seed),
        check_monotonicity(&params, &profile, v.random_instances, v.seed),
        check_oracle(50, v.mc_samples, v.seed),
        check_deviation(&diffuse, v.trials, v.seed),
    ];
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
