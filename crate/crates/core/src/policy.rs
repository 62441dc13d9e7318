//! Affine coordination strategies, neighbor-action beliefs and the
//! best-response rule against a homogeneous affine profile on a regular
//! graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{phi, posterior_params, std_normal_pdf, PosteriorParams};

/// Default bisection width for switching-curve roots.
pub const ROOT_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 200;

/// One problem instance: Gaussian priors on the two task difficulties,
/// Gaussian private noise, and a `degree`-regular graph on `n_agents` nodes.
///
/// All spreads are variances. When `diffuse` is set the prior variances are
/// ignored and every computation uses the infinite-variance limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub alpha1_sq: f64,
    pub alpha2_sq: f64,
    pub n_agents: usize,
    pub degree: usize,
    #[serde(default)]
    pub diffuse: bool,
}

impl GameParams {
    pub fn new(
        sigma1_sq: f64,
        sigma2_sq: f64,
        alpha1_sq: f64,
        alpha2_sq: f64,
        n_agents: usize,
        degree: usize,
    ) -> Result<Self> {
        let p = Self {
            sigma1_sq,
            sigma2_sq,
            alpha1_sq,
            alpha2_sq,
            n_agents,
            degree,
            diffuse: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn diffuse(alpha1_sq: f64, alpha2_sq: f64, n_agents: usize, degree: usize) -> Result<Self> {
        let p = Self {
            sigma1_sq: f64::INFINITY,
            sigma2_sq: f64::INFINITY,
            alpha1_sq,
            alpha2_sq,
            n_agents,
            degree,
            diffuse: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same instance with the degree set from a density `rho = K / N`.
    /// `rho * N` must be an integer.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.degree = degree_for_rho(rho, self.n_agents)?;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !self.diffuse {
            if !positive(self.sigma1_sq) {
                return Err(Error::config(
                    "game.sigma1_sq",
                    "must be positive and finite",
                ));
            }
            if !positive(self.sigma2_sq) {
                return Err(Error::config(
                    "game.sigma2_sq",
                    "must be positive and finite",
                ));
            }
        }
        if !positive(self.alpha1_sq) {
            return Err(Error::config(
                "game.alpha1_sq",
                "must be positive and finite",
            ));
        }
        if !positive(self.alpha2_sq) {
            return Err(Error::config(
                "game.alpha2_sq",
                "must be positive and finite",
            ));
        }
        if self.n_agents < 2 {
            return Err(Error::config("game.n_agents", "need at least two agents"));
        }
        if self.degree < 1 || self.degree >= self.n_agents {
            return Err(Error::config(
                "game.degree",
                format!("degree must lie in [1, {}]", self.n_agents - 1),
            ));
        }
        Ok(())
    }

    /// Graph density `K / N`.
    pub fn rho(&self) -> f64 {
        self.degree as f64 / self.n_agents as f64
    }

    pub fn posteriors(&self) -> Result<(PosteriorParams, PosteriorParams)> {
        Ok((
            posterior_params(self.sigma1_sq, self.alpha1_sq, self.diffuse)?,
            posterior_params(self.sigma2_sq, self.alpha2_sq, self.diffuse)?,
        ))
    }
}

pub fn degree_for_rho(rho: f64, n_agents: usize) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::config(
            "game.rho",
            format!("density must lie in (0, 1), got {rho}"),
        ));
    }
    let k = rho * n_agents as f64;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-9 {
        return Err(Error::config(
            "game.rho",
            format!("rho * n_agents = {k} is not an integer"),
        ));
    }
    Ok(rounded as usize)
}

/// The task an agent undertakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Task1,
    Task2,
}

impl Action {
    pub fn index(self) -> u8 {
        match self {
            Action::Task1 => 1,
            Action::Task2 => 2,
        }
    }
}

/// An agent's private signals `(y1, y2)` about the two task difficulties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y1: f64,
    pub y2: f64,
}

impl Observation {
    pub fn new(y1: f64, y2: f64) -> Self {
        Self { y1, y2 }
    }
}

/// Decision rule "task 1 iff `a1*y1 + a2*y2 <= tau`".
///
/// The threshold may be infinite, which gives the constant policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    pub a1: f64,
    pub a2: f64,
    pub tau: f64,
}

impl AffinePolicy {
    pub fn new(a1: f64, a2: f64, tau: f64) -> Result<Self> {
        if !a1.is_finite() || !a2.is_finite() || tau.is_nan() {
            return Err(Error::Domain(format!("invalid policy ({a1}, {a2}, {tau})")));
        }
        if a1 == 0.0 && a2 == 0.0 {
            return Err(Error::Domain("policy weights must not both be zero".into()));
        }
        Ok(Self { a1, a2, tau })
    }

    /// Homogeneous-profile normalization `a1 = 1`.
    pub fn normalized(a2: f64, tau: f64) -> Result<Self> {
        Self::new(1.0, a2, tau)
    }

    /// A policy that always picks `action`, whatever the signals.
    pub fn always(action: Action) -> Self {
        let tau = match action {
            Action::Task1 => f64::INFINITY,
            Action::Task2 => f64::NEG_INFINITY,
        };
        Self {
            a1: 1.0,
            a2: 0.0,
            tau,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            a1: self.a1 * c,
            a2: self.a2 * c,
            tau: self.tau * c,
        }
    }

    /// Ties go to task 1.
    #[inline]
    pub fn apply(&self, y: &Observation) -> Action {
        if self.a1 * y.y1 + self.a2 * y.y2 <= self.tau {
            Action::Task1
        } else {
            Action::Task2
        }
    }
}

pub fn apply_policy(p: &AffinePolicy, y: &Observation) -> Action {
    p.apply(y)
}

/// Pick the task with the smaller observed difficulty.
pub fn min_policy() -> AffinePolicy {
    AffinePolicy {
        a1: 1.0,
        a2: -1.0,
        tau: 0.0,
    }
}

/// What agent `i` needs to form a belief about a neighbor that plays
/// `neighbor`: both task posteriors, the noise variances and the variance
/// of the residual term `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefContext {
    pub post1: PosteriorParams,
    pub post2: PosteriorParams,
    pub alpha1_sq: f64,
    pub alpha2_sq: f64,
    pub neighbor: AffinePolicy,
    pub w_var: f64,
}

impl BeliefContext {
    pub fn new(params: &GameParams, neighbor: AffinePolicy) -> Result<Self> {
        let (post1, post2) = params.posteriors()?;
        let (a1, a2) = (neighbor.a1, neighbor.a2);
        let noise = a1 * a1 * params.alpha1_sq + a2 * a2 * params.alpha2_sq;
        if noise <= 0.0 {
            return Err(Error::Domain(
                "neighbor policy has zero weight vector".into(),
            ));
        }
        let w_var = if params.diffuse {
            1.0
        } else {
            (a1 * a1 * post1.sigma_tilde_sq + a2 * a2 * post2.sigma_tilde_sq) / noise
        };
        Ok(Self {
            post1,
            post2,
            alpha1_sq: params.alpha1_sq,
            alpha2_sq: params.alpha2_sq,
            neighbor,
            w_var,
        })
    }

    /// Overrides the variance of `W`. Only meant for negative controls.
    pub fn with_w_var(mut self, w_var: f64) -> Self {
        self.w_var = w_var;
        self
    }

    fn noise_sd(&self) -> f64 {
        let (a1, a2) = (self.neighbor.a1, self.neighbor.a2);
        (a1 * a1 * self.alpha1_sq + a2 * a2 * self.alpha2_sq).sqrt()
    }

    /// The shift `c` in `E[Phi(c - W)]`.
    pub fn shift(&self, y: &Observation) -> f64 {
        let p = &self.neighbor;
        (p.tau - self.post1.d * p.a1 * y.y1 - self.post2.d * p.a2 * y.y2) / self.noise_sd()
    }
}

/// Probability that a neighbor playing `ctx.neighbor` chooses task 1, given
/// this agent observed `y`.
pub fn belief(ctx: &BeliefContext, y: &Observation) -> Result<f64> {
    if ctx.noise_sd() == 0.0 || !ctx.noise_sd().is_finite() {
        return Err(Error::Domain("belief: zero neighbor weight vector".into()));
    }
    if !(ctx.w_var >= 0.0) {
        return Err(Error::Domain(format!(
            "belief: negative W variance {}",
            ctx.w_var
        )));
    }
    Ok(phi(ctx.shift(y) / (1.0 + ctx.w_var).sqrt()))
}

/// Best-response margin against a homogeneous profile on a regular graph:
/// `K*pi(y) - K/2 - (rho*K/2)(d1*y1 - d2*y2)`. Non-negative means task 1.
pub fn br_lhs_minus_rhs(
    params: &GameParams,
    profile: &AffinePolicy,
    y: &Observation,
) -> Result<f64> {
    let ctx = BeliefContext::new(params, *profile)?;
    let pi = belief(&ctx, y)?;
    let k = params.degree as f64;
    let bias = ctx.post1.d * y.y1 - ctx.post2.d * y.y2;
    Ok(k * pi - 0.5 * k - 0.5 * params.rho() * k * bias)
}

/// Best response as an action.
pub fn best_response(
    params: &GameParams,
    profile: &AffinePolicy,
    y: &Observation,
) -> Result<Action> {
    Ok(if br_lhs_minus_rhs(params, profile, y)? >= 0.0 {
        Action::Task1
    } else {
        Action::Task2
    })
}

/// The diffuse-limit margin against min-policy opponents, per neighbor:
///
/// `F(y) = Phi((y2 - y1) / sqrt(2(alpha1^2 + alpha2^2))) - 1/2 + (rho/2)(y2 - y1)`.
///
/// Equals `br_lhs_minus_rhs / K` for a diffuse instance and the min policy.
/// Zero exactly on the diagonal and strictly increasing in `y2 - y1`.
pub fn diffuse_f(params: &GameParams, y: &Observation) -> Result<f64> {
    if !params.diffuse {
        return Err(Error::Domain(
            "diffuse_f requires a diffuse instance".into(),
        ));
    }
    let gap = y.y2 - y.y1;
    let scale = (2.0 * (params.alpha1_sq + params.alpha2_sq)).sqrt();
    Ok(phi(gap / scale) - 0.5 + 0.5 * params.rho() * gap)
}

/// `G = G1 - G2` at one point, with both parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingValue {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
}

/// The switching function `G(xi, y2)` for a fixed instance and homogeneous
/// profile, precomputed for repeated evaluation:
///
/// ```text
/// G1(xi, y2) = Phi((tau - a1 d1 xi - a2 d2 y2) / (s * sqrt(1 + w)))
/// G2(xi, y2) = 1/2 + (rho/2)(d1 xi - d2 y2)
/// ```
///
/// with `s = sqrt(a1^2 alpha1^2 + a2^2 alpha2^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SwitchingFunction {
    profile: AffinePolicy,
    d1: f64,
    d2: f64,
    half_rho: f64,
    scale: f64,
}

impl SwitchingFunction {
    pub fn new(params: &GameParams, profile: &AffinePolicy) -> Result<Self> {
        let ctx = BeliefContext::new(params, *profile)?;
        Ok(Self::from_context(&ctx, params.rho()))
    }

    pub fn from_context(ctx: &BeliefContext, rho: f64) -> Self {
        Self {
            profile: ctx.neighbor,
            d1: ctx.post1.d,
            d2: ctx.post2.d,
            half_rho: 0.5 * rho,
            scale: ctx.noise_sd() * (1.0 + ctx.w_var).sqrt(),
        }
    }

    #[inline]
    fn arg(&self, xi: f64, y2: f64) -> f64 {
        let p = &self.profile;
        (p.tau - p.a1 * self.d1 * xi - p.a2 * self.d2 * y2) / self.scale
    }

    #[inline]
    pub fn g1(&self, xi: f64, y2: f64) -> f64 {
        phi(self.arg(xi, y2))
    }

    #[inline]
    pub fn g2(&self, xi: f64, y2: f64) -> f64 {
        0.5 + self.half_rho * (self.d1 * xi - self.d2 * y2)
    }

    #[inline]
    pub fn value(&self, xi: f64, y2: f64) -> f64 {
        self.g1(xi, y2) - self.g2(xi, y2)
    }

    pub fn eval(&self, xi: f64, y2: f64) -> SwitchingValue {
        let g1 = self.g1(xi, y2);
        let g2 = self.g2(xi, y2);
        SwitchingValue { g: g1 - g2, g1, g2 }
    }

    pub fn d_dxi(&self, xi: f64, y2: f64) -> f64 {
        let dens = std_normal_pdf(self.arg(xi, y2));
        -dens * self.profile.a1 * self.d1 / self.scale - self.half_rho * self.d1
    }

    pub fn d_dy2(&self, xi: f64, y2: f64) -> f64 {
        let dens = std_normal_pdf(self.arg(xi, y2));
        -dens * self.profile.a2 * self.d2 / self.scale + self.half_rho * self.d2
    }

    /// Upper bound on `|dG/dxi|`, used to scale residual checks.
    pub fn max_abs_d_dxi(&self) -> f64 {
        crate::math::FRAC_1_SQRT_2PI * self.profile.a1.abs() * self.d1 / self.scale
            + self.half_rho * self.d1
    }

    /// The unique `xi` with `G(xi, y2) = 0`. Brackets by geometric expansion
    /// from the point where `G1`'s argument vanishes, then bisects to width
    /// `tol`. Returns the root and the number of `G` evaluations spent.
    pub fn root(&self, y2: f64, tol: f64) -> Result<(f64, u32)> {
        let p = &self.profile;
        if !(p.a1 > 0.0) {
            return Err(Error::Domain(format!(
                "switching curve needs a1 > 0, got {}",
                p.a1
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let x0 = (p.tau - p.a2 * self.d2 * y2) / (p.a1 * self.d1);
        if !x0.is_finite() || !y2.is_finite() {
            return Err(Error::Domain(format!(
                "no finite starting point at y2 = {y2}"
            )));
        }
        let mut evals = 1;
        let g0 = self.value(x0, y2);
        if g0 == 0.0 {
            return Ok((x0, evals));
        }
        // invariant: G(lo) >= 0 > G(hi)
        let (mut lo, mut hi);
        let mut step = 1.0;
        if g0 > 0.0 {
            lo = x0;
            hi = x0 + step;
            while self.value(hi, y2) >= 0.0 {
                evals += 1;
                if evals > MAX_DOUBLINGS {
                    return Err(Error::Solver(format!(
                        "no sign change above {x0} at y2 = {y2}"
                    )));
                }
                lo = hi;
                step *= 2.0;
                hi = x0 + step;
            }
        } else {
            hi = x0;
            lo = x0 - step;
            while self.value(lo, y2) < 0.0 {
                evals += 1;
                if evals > MAX_DOUBLINGS {
                    return Err(Error::Solver(format!(
                        "no sign change below {x0} at y2 = {y2}"
                    )));
                }
                hi = lo;
                step *= 2.0;
                lo = x0 - step;
            }
        }
        evals += 1;
        while hi - lo > tol {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            evals += 1;
            if self.value(mid, y2) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + 0.5 * (hi - lo), evals))
    }

    /// `g'(y2) = -(dG/dy2) / (dG/dxi)` at the root.
    pub fn slope(&self, y2: f64, tol: f64) -> Result<f64> {
        let (xi, _) = self.root(y2, tol)?;
        self.slope_at(xi, y2)
    }

    pub fn slope_at(&self, xi: f64, y2: f64) -> Result<f64> {
        let dxi = self.d_dxi(xi, y2);
        if dxi == 0.0 || !dxi.is_finite() {
            return Err(Error::Invariant(format!("dG/dxi = {dxi} at ({xi}, {y2})")));
        }
        Ok(-self.d_dy2(xi, y2) / dxi)
    }
}

pub fn switching_g(
    params: &GameParams,
    profile: &AffinePolicy,
    xi: f64,
    y2: f64,
) -> Result<SwitchingValue> {
    Ok(SwitchingFunction::new(params, profile)?.eval(xi, y2))
}

/// Root of `G(., y2)`: the best response is task 1 iff `y1 <= xi`.
pub fn switching_curve_point(
    params: &GameParams,
    profile: &AffinePolicy,
    y2: f64,
    tol: f64,
) -> Result<(f64, u32)> {
    SwitchingFunction::new(params, profile)?.root(y2, tol)
}

pub fn switching_curve_slope(params: &GameParams, profile: &AffinePolicy, y2: f64) -> Result<f64> {
    SwitchingFunction::new(params, profile)?.slope(y2, ROOT_TOL)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn diffuse_params(k: usize) -> GameParams {
        GameParams::diffuse(1.0, 1.0, 10, k).unwrap()
    }

    fn nonlinear_instance() -> (GameParams, AffinePolicy) {
        (
            GameParams::new(1.0, 2.0, 1.0, 1.0, 10, 4).unwrap(),
            AffinePolicy::new(1.0, -2.0, 0.0).unwrap(),
        )
    }

    #[test]
    fn min_policy_decisions() {
        let p = min_policy();
        assert_eq!((p.a1, p.a2, p.tau), (1.0, -1.0, 0.0));
        assert_eq!(apply_policy(&p, &Observation::new(0.3, 0.7)), Action::Task1);
        assert_eq!(apply_policy(&p, &Observation::new(0.7, 0.3)), Action::Task2);
        assert_eq!(apply_policy(&p, &Observation::new(0.5, 0.5)), Action::Task1);
        assert_eq!(apply_policy(&p, &Observation::new(2.0, 3.0)), Action::Task1);
        assert_eq!(apply_policy(&p, &Observation::new(3.0, 2.0)), Action::Task2);
    }

    #[test]
    fn policy_validation() {
        assert!(AffinePolicy::new(0.0, 0.0, 1.0).is_err());
        assert!(AffinePolicy::new(f64::NAN, 1.0, 0.0).is_err());
        let y = Observation::new(1e9, -1e9);
        assert_eq!(AffinePolicy::always(Action::Task1).apply(&y), Action::Task1);
        assert_eq!(AffinePolicy::always(Action::Task2).apply(&y), Action::Task2);
    }

    #[test]
    fn params_validation() {
        assert!(GameParams::new(1.0, 1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(GameParams::new(1.0, 1.0, 1.0, 1.0, 1, 1).is_err());
        assert!(GameParams::new(0.0, 1.0, 1.0, 1.0, 10, 4).is_err());
        assert!(GameParams::diffuse(1.0, 0.0, 10, 4).is_err());
        let p = diffuse_params(4).with_rho(0.5).unwrap();
        assert_eq!(p.degree, 5);
        assert!(diffuse_params(4).with_rho(1.2).is_err());
        assert!(diffuse_params(4).with_rho(0.25).is_err());
    }

    #[test]
    fn w_var_formula_and_diffuse_limit() {
        let (params, profile) = nonlinear_instance();
        let ctx = BeliefContext::new(&params, profile).unwrap();
        // sigma_tilde^2 = (1/2, 2/3); (1*1/2 + 4*2/3) / (1 + 4)
        let want = (0.5 + 4.0 * 2.0 / 3.0) / 5.0;
        assert!((ctx.w_var - want).abs() < 1e-15);
        let ctx = BeliefContext::new(
            &diffuse_params(4),
            AffinePolicy::new(3.0, -0.2, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(ctx.w_var, 1.0);
    }

    #[test]
    fn diffuse_belief_examples() {
        let ctx = BeliefContext::new(&diffuse_params(4), min_policy()).unwrap();
        assert_eq!(belief(&ctx, &Observation::new(0.0, 0.0)).unwrap(), 0.5);
        let far = belief(&ctx, &Observation::new(-60.0, 0.0)).unwrap();
        assert!(far > 1.0 - 1e-12);
        let mid = belief(&ctx, &Observation::new(-1.0, 0.0)).unwrap();
        assert!(mid > 0.5 && mid < far);
    }

    #[test]
    fn belief_rejects_zero_weights() {
        let mut ctx = BeliefContext::new(&diffuse_params(4), min_policy()).unwrap();
        ctx.neighbor = AffinePolicy {
            a1: 0.0,
            a2: 0.0,
            tau: 0.0,
        };
        assert!(belief(&ctx, &Observation::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn br_margin_examples() {
        let params = diffuse_params(4);
        let p = min_policy();
        for t in [-5.0, 0.0, 2.5] {
            let m = br_lhs_minus_rhs(&params, &p, &Observation::new(t, t)).unwrap();
            assert!(m.abs() < 1e-15);
        }
        let up = br_lhs_minus_rhs(&params, &p, &Observation::new(0.0, 1.0)).unwrap();
        let down = br_lhs_minus_rhs(&params, &p, &Observation::new(1.0, 0.0)).unwrap();
        assert!(up > 0.0);
        assert!((up + down).abs() < 1e-14, "{up} vs {down}");
        // K (Phi(1/2) - 1/2 + rho/2) with K = 4, rho = 0.4
        let want = 4.0 * (0.69146246127401310364 - 0.5 + 0.2);
        assert!((up - want).abs() < 1e-12);
    }

    #[test]
    fn diffuse_f_examples() {
        let params = diffuse_params(4);
        for c in [-3.0, 0.0, 7.0] {
            assert_eq!(diffuse_f(&params, &Observation::new(c, c)).unwrap(), 0.0);
        }
        let small = GameParams::diffuse(1.0, 1.0, 100, 1).unwrap();
        assert!(diffuse_f(&small, &Observation::new(0.0, 1e-3)).unwrap() > 0.0);
        // y = (0, 10), rho = 0.4: Phi(5) - 1/2 + 2
        let v = diffuse_f(&params, &Observation::new(0.0, 10.0)).unwrap();
        assert!((v - (0.99999971334842812081 - 0.5 + 2.0)).abs() < 1e-12);
        assert!(diffuse_f(&nonlinear_instance().0, &Observation::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn diffuse_f_is_per_neighbor_br_margin() {
        let params = diffuse_params(4);
        for &(a, b) in &[(0.3, -1.0), (2.0, 2.5), (-4.0, 1.0)] {
            let y = Observation::new(a, b);
            let f = diffuse_f(&params, &y).unwrap();
            let m = br_lhs_minus_rhs(&params, &min_policy(), &y).unwrap();
            assert!((f - m / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn switching_limits() {
        let (params, profile) = nonlinear_instance();
        let sf = SwitchingFunction::new(&params, &profile).unwrap();
        let lo = sf.eval(-1e6, 0.5);
        let hi = sf.eval(1e6, 0.5);
        assert!(lo.g1 > 1.0 - 1e-12 && lo.g2 < -1e4 && lo.g > 1e4);
        assert!(hi.g1 < 1e-12 && hi.g2 > 1e4 && hi.g < -1e4);
        let v = switching_g(&diffuse_params(4), &min_policy(), 0.0, 0.0).unwrap();
        assert_eq!(v.g, 0.0);
    }

    #[test]
    fn diffuse_curve_is_diagonal() {
        let params = diffuse_params(4);
        for y2 in [-3.0, 0.0, 3.0] {
            let (xi, _) = switching_curve_point(&params, &min_policy(), y2, ROOT_TOL).unwrap();
            assert!((xi - y2).abs() <= ROOT_TOL, "{xi} vs {y2}");
            let s = switching_curve_slope(&params, &min_policy(), y2).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn root_residual_and_bracket() {
        let (params, profile) = nonlinear_instance();
        let sf = SwitchingFunction::new(&params, &profile).unwrap();
        for y2 in [-20.0, -1.0, 0.0, 4.0, 20.0] {
            let (xi, iters) = sf.root(y2, ROOT_TOL).unwrap();
            assert!(iters > 0);
            assert!(sf.value(xi, y2).abs() <= sf.max_abs_d_dxi() * ROOT_TOL);
            assert!(sf.value(xi - 1e-8, y2) > 0.0);
            assert!(sf.value(xi + 1e-8, y2) < 0.0);
        }
    }

    #[test]
    fn root_requires_positive_a1() {
        let params = diffuse_params(4);
        let p = AffinePolicy::new(-1.0, 1.0, 0.0).unwrap();
        assert!(switching_curve_point(&params, &p, 0.0, ROOT_TOL).is_err());
        assert!(switching_curve_point(&params, &min_policy(), 0.0, 0.0).is_err());
    }

    #[test]
    fn nonlinear_instance_curve_increasing_with_positive_slope() {
        let (params, profile) = nonlinear_instance();
        let sf = SwitchingFunction::new(&params, &profile).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let y2 = -20.0 + 0.1 * i as f64;
            let (xi, _) = sf.root(y2, ROOT_TOL).unwrap();
            assert!(xi > prev);
            prev = xi;
        }
        for y2 in [-10.0, 0.0, 10.0] {
            assert!(sf.slope(y2, ROOT_TOL).unwrap() > 0.0);
        }
    }

    #[test]
    fn nonlinear_instance_root_matches_grid_scan() {
        // Dense scan of G over [-50, 50] at step 1e-4: the unique sign change
        // brackets the root at y2 = 0.
        let (params, profile) = nonlinear_instance();
        let sf = SwitchingFunction::new(&params, &profile).unwrap();
        let step = 1e-4;
        let n = (100.0 / step) as usize;
        let mut prev = sf.value(-50.0, 0.0);
        let mut changes = vec![];
        for i in 1..=n {
            let x = -50.0 + step * i as f64;
            let v = sf.value(x, 0.0);
            if (prev >= 0.0) != (v >= 0.0) {
                changes.push(x);
            }
            prev = v;
        }
        assert_eq!(changes.len(), 1);
        let (xi, _) = sf.root(0.0, ROOT_TOL).unwrap();
        let hi = changes[0];
        assert!(
            xi >= hi - step - 1e-9 && xi <= hi + 1e-9,
            "{xi} outside [{}, {hi}]",
            hi - step
        );
    }

    #[test]
    fn slope_matches_finite_differences() {
        let (params, profile) = nonlinear_instance();
        let sf = SwitchingFunction::new(&params, &profile).unwrap();
        let h = 1e-4;
        for y2 in [-10.0, -2.0, 0.0, 1.5, 10.0] {
            let s = sf.slope(y2, ROOT_TOL).unwrap();
            let up = sf.root(y2 + h, 1e-15).unwrap().0;
            let dn = sf.root(y2 - h, 1e-15).unwrap().0;
            let fd = (up - dn) / (2.0 * h);
            assert!(((s - fd) / fd).abs() < 1e-5, "y2={y2}: {s} vs {fd}");
        }
    }
}
