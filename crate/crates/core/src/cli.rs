//! The `mtgg` command line.
//!
//! Exit codes: 0 success, 1 other runtime failure, 2 bad config,
//! 3 solver did not converge, 4 a verification check failed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format, PolicySource};
use crate::equilibrium::{project_affine, solve_affine_bne, ProjectionSample, SolveResult};
use crate::error::{Error, Result};
use crate::graph::make_regular_graph;
use crate::output::{cell, emit, OutputTable, Record};
use crate::policy::{min_policy, AffinePolicy, GameParams, SwitchingFunction};
use crate::simulation::{
    certification_competitors, deviation_gain, homogeneous_profile, noise_sweep, simulate,
    SimReport,
};
use crate::verify::{run_verify, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const THREADS_ENV: &str = "MTGG_THREADS";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Solver(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mtgg",
    version,
    about = "Multi-task Gaussian global games on regular networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config, or any artifact this tool emitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate to an affine equilibrium.
    Solve,
    /// Solve once per graph density.
    SweepRho {
        /// Densities; defaults to `sweep.rho` in the config.
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
    },
    /// Tabulate the best-response switching curve.
    BrCurve {
        #[arg(long, allow_negative_numbers = true)]
        y2_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        y2_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Play the game on a circulant graph.
    Simulate,
    /// Run the self-checks.
    Verify,
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Record<SolveResult>> {
    let res = solve_affine_bne(&cfg.params()?, &cfg.solve)?;
    Ok(Record::new("solve", cfg, cfg.solve.seed, res))
}

fn solve_table(rec: &Record<SolveResult>, cfg: &ExperimentConfig) -> OutputTable {
    let r = &rec.result;
    let mut t = OutputTable::new("solve", cfg, cfg.solve.seed, &["iteration", "a2", "tau"]);
    t.extra("a2_star", cell(r.a2_star));
    t.extra("tau_star", cell(r.tau_star));
    t.extra("residual_error", cell(r.residual_error));
    t.extra("iterations", r.iterations);
    t.extra("converged", r.converged);
    for (i, (a2, tau)) in r.trajectory.iter().enumerate() {
        t.push(vec![i.to_string(), cell(*a2), cell(*tau)]);
    }
    t
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "rho",
    "degree",
    "a2_star",
    "tau_star",
    "residual_error",
    "iterations",
    "converged",
    "error",
];

/// One solve per density. Failures land in the `error` column.
pub fn cmd_sweep_rho(cfg: &ExperimentConfig, rho_list: &[f64]) -> Result<OutputTable> {
    let base = cfg.params()?;
    for &rho in rho_list {
        base.with_rho(rho)
            .map_err(|e| Error::config("sweep.rho", e.to_string()))?;
    }
    let rows: Vec<Vec<String>> = rho_list
        .par_iter()
        .map(|&rho| {
            let p = base.with_rho(rho).expect("checked above");
            match solve_affine_bne(&p, &cfg.solve) {
                Ok(r) => vec![
                    cell(rho),
                    p.degree.to_string(),
                    cell(r.a2_star),
                    cell(r.tau_star),
                    cell(r.residual_error),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                    String::new(),
                ],
                Err(e) => {
                    let nan = cell(f64::NAN);
                    vec![
                        cell(rho),
                        p.degree.to_string(),
                        nan.clone(),
                        nan.clone(),
                        nan,
                        "0".into(),
                        "false".into(),
                        e.to_string(),
                    ]
                }
            }
        })
        .collect();
    let mut t = OutputTable::new("sweep-rho", cfg, cfg.solve.seed, SWEEP_COLUMNS);
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

pub const CURVE_COLUMNS: &[&str] = &["y2", "g", "g_prime", "ls_fit", "asymptotic_fit", "flag"];

/// Where the asymptotic reference line is anchored.
pub const ASYMPTOTIC_Y2: f64 = 1e3;

/// Samples `g` and `g'` of the configured profile on an even grid, with two
/// reference lines: the least-squares line through the sampled points and
/// the line with slope `g'(1e3)` through the midpoint of `g(-1e3)`, `g(1e3)`.
pub fn cmd_br_curve(
    cfg: &ExperimentConfig,
    y2_min: f64,
    y2_max: f64,
    points: usize,
) -> Result<OutputTable> {
    if !(y2_min < y2_max) || !y2_min.is_finite() || !y2_max.is_finite() {
        return Err(Error::config("curve.y2_min", "need finite y2_min < y2_max"));
    }
    if points < 2 {
        return Err(Error::config("curve.points", "need at least 2 points"));
    }
    let params = cfg.params()?;
    let profile = cfg.curve.profile.policy("curve.profile")?;
    let sf = SwitchingFunction::new(&params, &profile)?;
    let tol = cfg.solve.root_tol;

    let samples: Vec<(f64, Result<(f64, f64)>)> = (0..points)
        .map(|i| {
            let y2 = y2_min + (y2_max - y2_min) * i as f64 / (points - 1) as f64;
            let r = sf
                .root(y2, tol)
                .and_then(|(g, _)| Ok((g, sf.slope_at(g, y2)?)));
            (y2, r)
        })
        .collect();
    let good: Vec<ProjectionSample> = samples
        .iter()
        .filter_map(|(y2, r)| {
            r.as_ref().ok().map(|&(g, _)| ProjectionSample {
                y2: *y2,
                g_of_y2: g,
            })
        })
        .collect();
    let ls = project_affine(&good).ok();
    let asym = (|| -> Result<(f64, f64)> {
        let (hi, _) = sf.root(ASYMPTOTIC_Y2, tol)?;
        let (lo, _) = sf.root(-ASYMPTOTIC_Y2, tol)?;
        Ok((sf.slope_at(hi, ASYMPTOTIC_Y2)?, 0.5 * (hi + lo)))
    })()
    .ok();

    let mut t = OutputTable::new("br-curve", cfg, cfg.solve.seed, CURVE_COLUMNS);
    let nan = f64::NAN;
    t.extra("ls_slope", cell(ls.map_or(nan, |f| f.slope)));
    t.extra("ls_intercept", cell(ls.map_or(nan, |f| f.intercept)));
    t.extra("asymptotic_slope", cell(asym.map_or(nan, |a| a.0)));
    t.extra("asymptotic_intercept", cell(asym.map_or(nan, |a| a.1)));
    for (y2, r) in samples {
        let line = |s: Option<(f64, f64)>| s.map_or(nan, |(m, b)| m * y2 + b);
        let (g, gp, flag) = match r {
            Ok((g, gp)) => (g, gp, "ok".to_string()),
            Err(e) => (nan, nan, e.to_string()),
        };
        t.push(vec![
            cell(y2),
            cell(g),
            cell(gp),
            cell(line(ls.map(|f| (f.slope, f.intercept)))),
            cell(line(asym)),
            flag,
        ]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub policy: AffinePolicy,
    #[serde(default)]
    pub solve: Option<SolveResult>,
    pub report: SimReport,
    /// `(noise variance, report)` pairs when a noise sweep was requested.
    #[serde(default)]
    pub noise_sweep: Vec<(f64, SimReport)>,
}

fn resolve_policy(
    cfg: &ExperimentConfig,
    params: &GameParams,
) -> Result<(AffinePolicy, Option<SolveResult>)> {
    Ok(match cfg.sim.policy {
        PolicySource::Min => (min_policy(), None),
        PolicySource::Explicit(p) => (p.policy("sim.policy")?, None),
        PolicySource::SolveFirst => {
            let r = solve_affine_bne(params, &cfg.solve)?;
            if !r.converged {
                return Err(Error::Solver(format!(
                    "no convergence within {} iterations; cannot simulate the solved profile",
                    r.iterations
                )));
            }
            (r.policy(), Some(r))
        }
    })
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Record<SimulateResult>> {
    let params = cfg.params()?;
    let graph = make_regular_graph(params.n_agents, params.degree)?;
    let (policy, solve) = resolve_policy(cfg, &params)?;
    let profile = homogeneous_profile(policy, params.n_agents);
    let s = &cfg.sim;
    let mut report = simulate(&params, &graph, &profile, s.trials, s.seed)?;
    if let Some(d) = s.deviation {
        let mut comps = certification_competitors(&policy, d.a2_span, d.tau_span, d.grid_points);
        if !d.best_response {
            comps.pop();
        }
        report.deviation = Some(deviation_gain(
            &params, &graph, &profile, d.focal, &comps, s.trials, s.seed,
        )?);
    }
    let sweep = noise_sweep(&params, &graph, policy, &s.noise_sweep, s.trials, s.seed)?;
    Ok(Record::new(
        "simulate",
        cfg,
        s.seed,
        SimulateResult {
            policy,
            solve,
            report,
            noise_sweep: sweep,
        },
    ))
}

pub const NOISE_COLUMNS: &[&str] = &[
    "alpha_sq",
    "coordination_rate",
    "coordination_se",
    "mean_payoff",
    "payoff_se",
    "task1_share",
    "task1_share_se",
];

fn se_cell(e: &crate::math::Estimate) -> String {
    cell(e.se())
}

fn simulate_table(rec: &Record<SimulateResult>, cfg: &ExperimentConfig) -> OutputTable {
    let r = &rec.result;
    let mut t = OutputTable::new("simulate", cfg, cfg.sim.seed, NOISE_COLUMNS);
    t.extra("policy_a2", cell(r.policy.a2));
    t.extra("policy_tau", cell(r.policy.tau));
    if let Some(d) = &r.report.deviation {
        t.extra("deviation_gain", cell(d.gain.mean));
        t.extra("deviation_gain_se", cell(d.gain.se()));
    }
    let params = cfg.params().expect("validated");
    let mut rows = vec![(params.alpha1_sq, &r.report)];
    if params.alpha1_sq != params.alpha2_sq {
        t.extra("alpha2_sq", cell(params.alpha2_sq));
    }
    if !r.noise_sweep.is_empty() {
        rows = r.noise_sweep.iter().map(|(v, rep)| (*v, rep)).collect();
    }
    for (v, rep) in rows {
        t.push(vec![
            cell(v),
            cell(rep.coordination_rate.mean),
            se_cell(&rep.coordination_rate),
            cell(rep.mean_payoff_per_agent.mean),
            se_cell(&rep.mean_payoff_per_agent),
            cell(rep.task1_share.mean),
            se_cell(&rep.task1_share),
        ]);
    }
    t
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Record<VerifyReport>> {
    Ok(Record::new(
        "verify",
        cfg,
        cfg.verify.seed,
        run_verify(cfg)?,
    ))
}

fn verify_table(rec: &Record<VerifyReport>, cfg: &ExperimentConfig) -> OutputTable {
    let mut t = OutputTable::new(
        "verify",
        cfg,
        cfg.verify.seed,
        &[
            "check",
            "passed",
            "observed",
            "tolerance",
            "margin",
            "detail",
        ],
    );
    for c in &rec.result.checks {
        t.push(vec![
            c.name.clone(),
            c.passed.to_string(),
            cell(c.observed),
            cell(c.tolerance),
            cell(c.margin),
            c.detail.clone(),
        ]);
    }
    t
}

/// Loads the config named on the command line with the seed override.
pub fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let cfg = ExperimentConfig::load(path)?;
    let cfg = match g.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// What one invocation produced, before anything is written.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub out: Option<PathBuf>,
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    let out = g.out.clone().or_else(|| cfg.outputs.path.clone());
    let format = match &g.format {
        Some(f) => Some(f.parse::<Format>()?),
        None => cfg.outputs.format,
    };
    let (code, text) = match &cli.command {
        Command::Solve => {
            let rec = cmd_solve(&cfg)?;
            let code = if rec.result.converged {
                EXIT_OK
            } else {
                EXIT_NONCONVERGENCE
            };
            let text = match format.unwrap_or(Format::Json) {
                Format::Json => rec.to_json()?,
                Format::Csv => solve_table(&rec, &cfg).to_csv()?,
            };
            (code, text)
        }
        Command::SweepRho { rho } => {
            let list = rho.clone().unwrap_or_else(|| cfg.sweep.rho.clone());
            let t = cmd_sweep_rho(&cfg, &list)?;
            (EXIT_OK, t.render(format.unwrap_or(Format::Csv))?)
        }
        Command::BrCurve {
            y2_min,
            y2_max,
            points,
        } => {
            let c = &cfg.curve;
            let t = cmd_br_curve(
                &cfg,
                y2_min.unwrap_or(c.y2_min),
                y2_max.unwrap_or(c.y2_max),
                points.unwrap_or(c.points),
            )?;
            (EXIT_OK, t.render(format.unwrap_or(Format::Csv))?)
        }
        Command::Simulate => {
            let rec = cmd_simulate(&cfg)?;
            let text = match format.unwrap_or(Format::Json) {
                Format::Json => rec.to_json()?,
                Format::Csv => simulate_table(&rec, &cfg).to_csv()?,
            };
            (EXIT_OK, text)
        }
        Command::Verify => {
            let rec = cmd_verify(&cfg)?;
            for c in &rec.result.checks {
                eprintln!("{}", c.line());
            }
            let code = if rec.result.passed {
                EXIT_OK
            } else {
                EXIT_VERIFY
            };
            let text = match format.unwrap_or(Format::Json) {
                Format::Json => rec.to_json()?,
                Format::Csv => verify_table(&rec, &cfg).to_csv()?,
            };
            (code, text)
        }
    };
    Ok(Outcome { code, text, out })
}

/// Full invocation: sets up the thread pool, runs, writes output, and maps
/// errors to exit codes.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.global.threads {
        // Fails only if a pool already exists, in which case keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = execute(&cli).and_then(|o| {
        emit(&o.text, o.out.as_deref())?;
        Ok(o.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mtgg: {e}");
            exit_code(&e)
        }
    }
}
