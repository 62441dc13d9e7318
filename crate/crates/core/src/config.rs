//! Experiment configuration files.
//!
//! Configs are JSON. Every spread is a variance (`*_sq`); standard
//! deviations are never accepted. Unknown keys are rejected. A minimal file
//! only needs the `game` section:
//!
//! ```json
//! {
//!   "game": { "sigma1_sq": 2.0, "sigma2_sq": 1.0, "alpha1_sq": 1.0,
//!             "alpha2_sq": 1.0, "n_agents": 10, "rho": 0.4 }
//! }
//! ```
//!
//! The graph degree is given either as `degree` or as a density `rho` with
//! `rho * n_agents` integral. `"diffuse": true` drops the prior variances.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equilibrium::SolveConfig;
use crate::error::{Error, Result};
use crate::policy::{degree_for_rho, AffinePolicy, GameParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(default)]
    pub sigma1_sq: Option<f64>,
    #[serde(default)]
    pub sigma2_sq: Option<f64>,
    pub alpha1_sq: f64,
    pub alpha2_sq: f64,
    pub n_agents: usize,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub diffuse: bool,
}

impl GameSection {
    pub fn to_params(&self) -> Result<GameParams> {
        let degree = match (self.degree, self.rho) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "game.rho",
                    "give either `degree` or `rho`, not both",
                ))
            }
            (Some(k), None) => k,
            (None, Some(rho)) => degree_for_rho(rho, self.n_agents)?,
            (None, None) => return Err(Error::config("game.degree", "missing `degree` or `rho`")),
        };
        let sigma = |v: Option<f64>, name: &str| -> Result<f64> {
            match (v, self.diffuse) {
                (_, true) => Ok(f64::INFINITY),
                (Some(v), false) => Ok(v),
                (None, false) => Err(Error::config(
                    format!("game.{name}"),
                    "required unless `diffuse` is true",
                )),
            }
        };
        let p = GameParams {
            sigma1_sq: sigma(self.sigma1_sq, "sigma1_sq")?,
            sigma2_sq: sigma(self.sigma2_sq, "sigma2_sq")?,
            alpha1_sq: self.alpha1_sq,
            alpha2_sq: self.alpha2_sq,
            n_agents: self.n_agents,
            degree,
            diffuse: self.diffuse,
        };
        p.validate()?;
        Ok(p)
    }
}

/// `(a2, tau)` of a normalized policy `(1, a2, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub a2: f64,
    pub tau: f64,
}

impl ProfileSpec {
    pub fn policy(&self, field: &str) -> Result<AffinePolicy> {
        AffinePolicy::normalized(self.a2, self.tau).map_err(|e| Error::config(field, e.to_string()))
    }
}

/// Where the simulated profile comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySource {
    #[default]
    Min,
    SolveFirst,
    Explicit(ProfileSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviationSection {
    pub focal: usize,
    pub grid_points: usize,
    pub a2_span: f64,
    pub tau_span: f64,
    pub best_response: bool,
}

impl Default for DeviationSection {
    fn default() -> Self {
        Self {
            focal: 0,
            grid_points: 9,
            a2_span: 0.4,
            tau_span: 0.5,
            best_response: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub trials: u64,
    pub seed: u64,
    pub policy: PolicySource,
    /// Noise variances for a coordination-vs-noise sweep; empty disables it.
    pub noise_sweep: Vec<f64>,
    pub deviation: Option<DeviationSection>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 1,
            policy: PolicySource::Min,
            noise_sweep: vec![],
            deviation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub y2_min: f64,
    pub y2_max: f64,
    pub points: usize,
    pub profile: ProfileSpec,
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            y2_min: -20.0,
            y2_max: 20.0,
            points: 81,
            profile: ProfileSpec { a2: -1.0, tau: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub mc_samples: u64,
    pub trials: u64,
    pub random_instances: usize,
    /// Test hook: force the variance of `W` in the normal-expectation check.
    pub corrupt_w_var: Option<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            seed: 7,
            mc_samples: 1_000_000,
            trials: 100_000,
            random_instances: 20,
            corrupt_w_var: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(
                "outputs.format",
                format!("unknown format `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSection,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub outputs: OutputSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "<root>".into() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or the config embedded in an emitted artifact.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        match crate::output::embedded_config(&text)? {
            Some(cfg) => Ok(cfg),
            None => Self::from_json(&text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Applies a master seed to every stochastic stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.solve.seed = seed;
        self.sim.seed = seed;
        self.verify.seed = seed;
        self
    }

    pub fn params(&self) -> Result<GameParams> {
        self.game.to_params()
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.solve.validate()?;
        if self.sim.trials < 1 {
            return Err(Error::config("sim.trials", "must be at least 1"));
        }
        if let PolicySource::Explicit(p) = self.sim.policy {
            p.policy("sim.policy")?;
        }
        if self
            .sim
            .noise_sweep
            .iter()
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::config(
                "sim.noise_sweep",
                "noise variances must be positive",
            ));
        }
        if let Some(d) = self.sim.deviation {
            if d.focal >= params.n_agents {
                return Err(Error::config(
                    "sim.deviation.focal",
                    "focal agent out of range",
                ));
            }
            if d.grid_points < 1 && !d.best_response {
                return Err(Error::config(
                    "sim.deviation.grid_points",
                    "empty competitor set",
                ));
            }
        }
        let c = &self.curve;
        if !(c.y2_min < c.y2_max) || !c.y2_min.is_finite() || !c.y2_max.is_finite() {
            return Err(Error::config("curve.y2_min", "need finite y2_min < y2_max"));
        }
        if c.points < 2 {
            return Err(Error::config("curve.points", "need at least 2 points"));
        }
        let prof = c.profile.policy("curve.profile")?;
        if !prof.tau.is_finite() {
            return Err(Error::config("curve.profile.tau", "must be finite"));
        }
        for &rho in &self.sweep.rho {
            degree_for_rho(rho, params.n_agents)
                .map_err(|e| Error::config("sweep.rho", e.to_string()))?;
        }
        if let Some(path) = &self.outputs.path {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let writable =
                std::fs::metadata(dir).map(|m| m.is_dir() && !m.permissions().readonly());
            if !writable.unwrap_or(false) {
                return Err(Error::config(
                    "outputs.path",
                    format!("{} is not a writable directory", dir.display()),
                ));
            }
        }
        if self.verify.mc_samples < 2 {
            return Err(Error::config(
                "verify.mc_samples",
                "need at least 2 samples",
            ));
        }
        if self.verify.trials < 2 {
            return Err(Error::config("verify.trials", "need at least 2 trials"));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
