//! Monte Carlo play of the networked game.
//!
//! Every trial draws both task difficulties, every agent's private signals,
//! applies the agents' policies and scores the resulting action profile.
//! Trial `t` uses RNG stream `t` of the master seed, so results do not
//! depend on how trials are scheduled across threads, and two calls with
//! the same seed see the same states and signals (common random numbers).

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::DIFFUSE_PROPOSAL;
use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::math::{Accumulator, Estimate};
use crate::policy::{belief, Action, AffinePolicy, BeliefContext, GameParams, Observation};
use crate::rng::stream_rng;

/// Payoff to agent `i` from its game with neighbor `j`: a coordination bonus
/// of `1/deg_i` when the actions match, minus the difficulty of the task `i`
/// chose scaled by `1/n`. `deg_j` does not enter.
pub fn pairwise_utility(
    a_i: Action,
    a_j: Action,
    theta: (f64, f64),
    deg_i: usize,
    _deg_j: usize,
    n: usize,
) -> f64 {
    let bonus = if a_i == a_j { 1.0 / deg_i as f64 } else { 0.0 };
    let cost = match a_i {
        Action::Task1 => theta.0,
        Action::Task2 => theta.1,
    };
    bonus - cost / n as f64
}

/// The 2x2 bimatrix between `i` (rows) and `j` (columns), indexed by
/// `[a_i - 1][a_j - 1]`, entries `(payoff_i, payoff_j)`.
pub fn bimatrix(theta: (f64, f64), deg_i: usize, deg_j: usize, n: usize) -> [[(f64, f64); 2]; 2] {
    let acts = [Action::Task1, Action::Task2];
    let mut m = [[(0.0, 0.0); 2]; 2];
    for (r, &ai) in acts.iter().enumerate() {
        for (c, &aj) in acts.iter().enumerate() {
            m[r][c] = (
                pairwise_utility(ai, aj, theta, deg_i, deg_j, n),
                pairwise_utility(aj, ai, theta, deg_j, deg_i, n),
            );
        }
    }
    m
}

/// Sum of pairwise utilities of node `i` over its neighbors.
pub fn local_utility(i: usize, actions: &[Action], theta: (f64, f64), graph: &RegularGraph) -> f64 {
    let k = graph.degree();
    graph
        .neighbors(i)
        .iter()
        .map(|&j| pairwise_utility(actions[i], actions[j], theta, k, k, graph.n()))
        .sum()
}

/// Pure Nash equilibria of the deterministic pairwise game. `(1,1)` survives
/// while `theta1 - theta2 <= n / max(deg_i, deg_j)` and `(2,2)` while
/// `theta1 - theta2 >= -n / max(deg_i, deg_j)`; on a regular graph this is
/// the familiar `L = n / K` band.
pub fn classify_pure_equilibria(
    theta1: f64,
    theta2: f64,
    deg_i: usize,
    deg_j: usize,
    n: usize,
) -> BTreeSet<(Action, Action)> {
    let l = n as f64 / deg_i.max(deg_j) as f64;
    let gap = theta1 - theta2;
    let mut set = BTreeSet::new();
    if gap <= l {
        set.insert((Action::Task1, Action::Task1));
    }
    if gap >= -l {
        set.insert((Action::Task2, Action::Task2));
    }
    set
}

fn prior_sds(params: &GameParams) -> (f64, f64) {
    if params.diffuse {
        (
            (DIFFUSE_PROPOSAL * params.alpha1_sq).sqrt(),
            (DIFFUSE_PROPOSAL * params.alpha2_sq).sqrt(),
        )
    } else {
        (params.sigma1_sq.sqrt(), params.sigma2_sq.sqrt())
    }
}

/// One draw of the difficulties and every agent's signals.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDraw {
    pub theta1: f64,
    pub theta2: f64,
    pub signals: Vec<Observation>,
}

impl StateDraw {
    pub fn theta(&self) -> (f64, f64) {
        (self.theta1, self.theta2)
    }
}

pub fn draw_state(params: &GameParams, n: usize, seed: u64, trial: u64) -> StateDraw {
    let mut rng = stream_rng(seed, trial);
    let (sd1, sd2) = prior_sds(params);
    let (n1, n2) = (params.alpha1_sq.sqrt(), params.alpha2_sq.sqrt());
    let mut z = || -> f64 { rng.sample(StandardNormal) };
    let theta1 = sd1 * z();
    let theta2 = sd2 * z();
    let signals = (0..n)
        .map(|_| Observation::new(theta1 + n1 * z(), theta2 + n2 * z()))
        .collect();
    StateDraw {
        theta1,
        theta2,
        signals,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub mean_payoff_per_agent: Estimate,
    /// Fraction of edges whose endpoints take the same task.
    pub coordination_rate: Estimate,
    pub task1_share: Estimate,
    #[serde(default)]
    pub deviation: Option<DeviationReport>,
}

impl SimReport {
    /// True when the standard errors are undefined (a single trial).
    pub fn degenerate(&self) -> bool {
        self.coordination_rate.std_err.is_none()
    }
}

fn check_profile(graph: &RegularGraph, profile: &[AffinePolicy]) -> Result<()> {
    if profile.len() != graph.n() {
        return Err(Error::Domain(format!(
            "profile has {} policies for {} agents",
            profile.len(),
            graph.n()
        )));
    }
    Ok(())
}

fn check_graph(params: &GameParams, graph: &RegularGraph) -> Result<()> {
    if graph.n() != params.n_agents || graph.degree() != params.degree {
        return Err(Error::Domain(format!(
            "graph ({}, {}) does not match game (N = {}, K = {})",
            graph.n(),
            graph.degree(),
            params.n_agents,
            params.degree
        )));
    }
    Ok(())
}

/// Estimates per-agent payoff, coordination rate and task-1 share.
pub fn simulate(
    params: &GameParams,
    graph: &RegularGraph,
    profile: &[AffinePolicy],
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    params.validate()?;
    check_graph(params, graph)?;
    check_profile(graph, profile)?;
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n = graph.n();
    let per_trial: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = draw_state(params, n, seed, t);
            let actions: Vec<Action> = profile
                .iter()
                .zip(&s.signals)
                .map(|(p, y)| p.apply(y))
                .collect();
            let payoff = (0..n)
                .map(|i| local_utility(i, &actions, s.theta(), graph))
                .sum::<f64>()
                / n as f64;
            let matched = graph
                .edges()
                .filter(|&(i, j)| actions[i] == actions[j])
                .count();
            let coord = matched as f64 / graph.edge_count() as f64;
            let share = actions.iter().filter(|&&a| a == Action::Task1).count() as f64 / n as f64;
            [payoff, coord, share]
        })
        .collect();
    let mut acc = [Accumulator::default(); 3];
    for row in &per_trial {
        for (a, &x) in acc.iter_mut().zip(row) {
            a.push(x);
        }
    }
    Ok(SimReport {
        trials,
        mean_payoff_per_agent: acc[0].estimate(),
        coordination_rate: acc[1].estimate(),
        task1_share: acc[2].estimate(),
        deviation: None,
    })
}

/// An alternative policy for the focal agent in a deviation test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Competitor {
    Affine(AffinePolicy),
    /// The exact best response to neighbors that all play the given policy.
    BestResponse(AffinePolicy),
}

enum Rule {
    Affine(AffinePolicy),
    Br {
        ctx: BeliefContext,
        k: f64,
        rho: f64,
    },
}

impl Rule {
    fn act(&self, y: &Observation) -> Action {
        match self {
            Rule::Affine(p) => p.apply(y),
            Rule::Br { ctx, k, rho } => {
                let pi = belief(ctx, y).unwrap_or(f64::NAN);
                let bias = ctx.post1.d * y.y1 - ctx.post2.d * y.y2;
                if k * pi - 0.5 * k - 0.5 * rho * k * bias >= 0.0 {
                    Action::Task1
                } else {
                    Action::Task2
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub focal: usize,
    /// Largest estimated gain over the competitors, with its standard error.
    pub gain: Estimate,
    pub best_competitor: usize,
    pub per_competitor: Vec<Estimate>,
}

impl DeviationReport {
    /// `gain <= eps + 3 se`.
    pub fn certifies(&self, eps: f64) -> bool {
        self.gain.mean <= eps + 3.0 * self.gain.se()
    }
}

/// Estimated payoff improvement of the focal agent when it switches from
/// its profile policy to each competitor, everyone else unchanged. All
/// competitors are scored on the same draws.
pub fn deviation_gain(
    params: &GameParams,
    graph: &RegularGraph,
    profile: &[AffinePolicy],
    focal: usize,
    competitors: &[Competitor],
    trials: u64,
    seed: u64,
) -> Result<DeviationReport> {
    params.validate()?;
    check_graph(params, graph)?;
    check_profile(graph, profile)?;
    if competitors.is_empty() {
        return Err(Error::Domain(
            "deviation test needs at least one competitor".into(),
        ));
    }
    if focal >= graph.n() {
        return Err(Error::Domain(format!("focal agent {focal} out of range")));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let rules: Vec<Rule> = competitors
        .iter()
        .map(|c| match c {
            Competitor::Affine(p) => Ok(Rule::Affine(*p)),
            Competitor::BestResponse(p) => Ok(Rule::Br {
                ctx: BeliefContext::new(params, *p)?,
                k: params.degree as f64,
                rho: params.rho(),
            }),
        })
        .collect::<Result<_>>()?;
    let n = graph.n();
    let neighbors = graph.neighbors(focal);
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = draw_state(params, n, seed, t);
            let theta = s.theta();
            let others: Vec<Action> = neighbors
                .iter()
                .map(|&j| profile[j].apply(&s.signals[j]))
                .collect();
            let score = |a: Action| -> f64 {
                others
                    .iter()
                    .map(|&aj| pairwise_utility(a, aj, theta, neighbors.len(), neighbors.len(), n))
                    .sum()
            };
            let (v1, v2) = (score(Action::Task1), score(Action::Task2));
            let value = |a: Action| if a == Action::Task1 { v1 } else { v2 };
            let y = &s.signals[focal];
            let base = value(profile[focal].apply(y));
            rules.iter().map(|r| value(r.act(y)) - base).collect()
        })
        .collect();
    let mut acc = vec![Accumulator::default(); competitors.len()];
    for row in &per_trial {
        for (a, &x) in acc.iter_mut().zip(row) {
            a.push(x);
        }
    }
    let per_competitor: Vec<Estimate> = acc.iter().map(Accumulator::estimate).collect();
    let best = per_competitor.iter().enumerate().fold(0, |b, (i, e)| {
        if e.mean > per_competitor[b].mean {
            i
        } else {
            b
        }
    });
    Ok(DeviationReport {
        focal,
        gain: per_competitor[best],
        best_competitor: best,
        per_competitor,
    })
}

/// `n x n` grid of affine policies around `center`, offsets spanning
/// `[-a2_span, a2_span] x [-tau_span, tau_span]`. `a1` is kept.
pub fn perturbation_grid(
    center: &AffinePolicy,
    a2_span: f64,
    tau_span: f64,
    n: usize,
) -> Vec<AffinePolicy> {
    let offsets = |span: f64| -> Vec<f64> {
        if n < 2 {
            return vec![0.0];
        }
        (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut grid = Vec::with_capacity(n * n);
    for da in offsets(a2_span) {
        for dt in offsets(tau_span) {
            grid.push(AffinePolicy {
                a1: center.a1,
                a2: center.a2 + da,
                tau: center.tau + dt,
            });
        }
    }
    grid
}

/// Competitor set used for certification: the perturbation grid plus the
/// exact best response to the (homogeneous) profile.
pub fn certification_competitors(
    center: &AffinePolicy,
    a2_span: f64,
    tau_span: f64,
    n: usize,
) -> Vec<Competitor> {
    let mut c: Vec<Competitor> = perturbation_grid(center, a2_span, tau_span, n)
        .into_iter()
        .map(Competitor::Affine)
        .collect();
    c.push(Competitor::BestResponse(*center));
    c
}

pub fn homogeneous_profile(policy: AffinePolicy, n: usize) -> Vec<AffinePolicy> {
    vec![policy; n]
}

/// Coordination rate of a homogeneous profile as both noise variances are
/// set to each value in `noise_vars`. Every point reuses `seed`.
pub fn noise_sweep(
    params: &GameParams,
    graph: &RegularGraph,
    policy: AffinePolicy,
    noise_vars: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, SimReport)>> {
    let profile = homogeneous_profile(policy, graph.n());
    noise_vars
        .iter()
        .map(|&v| {
            let p = GameParams {
                alpha1_sq: v,
                alpha2_sq: v,
                ..*params
            };
            simulate(&p, graph, &profile, trials, seed).map(|r| (v, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_regular_graph;
    use crate::policy::min_policy;
    use Action::{Task1, Task2};

    fn brute_force(
        theta: (f64, f64),
        deg_i: usize,
        deg_j: usize,
        n: usize,
    ) -> BTreeSet<(Action, Action)> {
        let m = bimatrix(theta, deg_i, deg_j, n);
        let acts = [Task1, Task2];
        let mut out = BTreeSet::new();
        for r in 0..2 {
            for c in 0..2 {
                let i_ok = m[r][c].0 >= m[1 - r][c].0;
                let j_ok = m[r][c].1 >= m[r][1 - c].1;
                if i_ok && j_ok {
                    out.insert((acts[r], acts[c]));
                }
            }
        }
        out
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_utility(Task1, Task1, (0.0, 0.0), 4, 4, 10), 0.25);
        assert!((pairwise_utility(Task1, Task2, (2.0, 0.0), 4, 4, 10) + 0.2).abs() < 1e-15);
        assert_eq!(
            pairwise_utility(Task2, Task2, (1.5, 1.5), 4, 4, 10),
            pairwise_utility(Task1, Task1, (1.5, 1.5), 4, 4, 10)
        );
    }

    #[test]
    fn local_utility_examples() {
        let g = make_regular_graph(10, 4).unwrap();
        let all1 = vec![Task1; 10];
        for i in 0..10 {
            assert!((local_utility(i, &all1, (0.0, 0.0), &g) - 1.0).abs() < 1e-15);
        }
        let mut mixed = vec![Task2; 10];
        mixed[0] = Task1;
        assert_eq!(local_utility(0, &mixed, (0.0, 0.0), &g), 0.0);
    }

    #[test]
    fn local_utility_hand_computed_ring() {
        // 5-node ring, k = 2, actions 1 1 2 1 2, theta = (0.5, -1), N = 5.
        let g = make_regular_graph(5, 2).unwrap();
        let a = [Task1, Task1, Task2, Task1, Task2];
        let th = (0.5, -1.0);
        // node 0: neighbors 1 (match), 4 (no): 1/2 - 2 * 0.1
        assert!((local_utility(0, &a, th, &g) - 0.3).abs() < 1e-15);
        // node 2 plays 2: neighbors 1 (no), 3 (no): 2 * 0.2
        assert!((local_utility(2, &a, th, &g) - 0.4).abs() < 1e-15);
        // node 4 plays 2: neighbors 3 (no), 0 (no): 0.4
        assert!((local_utility(4, &a, th, &g) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn total_utility_invariant_under_rotation() {
        let g = make_regular_graph(12, 4).unwrap();
        let a: Vec<Action> = (0..12)
            .map(|i| if i % 3 == 0 { Task2 } else { Task1 })
            .collect();
        let th = (0.3, -0.7);
        let total = |acts: &[Action]| (0..12).map(|i| local_utility(i, acts, th, &g)).sum::<f64>();
        let base = total(&a);
        for r in 1..12 {
            let rot: Vec<Action> = (0..12).map(|i| a[(i + r) % 12]).collect();
            assert!((total(&rot) - base).abs() < 1e-12);
        }
    }

    #[test]
    fn classifier_examples() {
        let l = 10.0 / 4.0;
        assert_eq!(
            classify_pure_equilibria(-2.0 * l, 0.0, 4, 4, 10),
            BTreeSet::from([(Task1, Task1)])
        );
        assert_eq!(
            classify_pure_equilibria(2.0 * l, 0.0, 4, 4, 10),
            BTreeSet::from([(Task2, Task2)])
        );
        assert_eq!(
            classify_pure_equilibria(0.7, 0.7, 4, 4, 10),
            BTreeSet::from([(Task1, Task1), (Task2, Task2)])
        );
        assert_eq!(
            classify_pure_equilibria(l, 0.0, 4, 4, 10),
            BTreeSet::from([(Task1, Task1), (Task2, Task2)])
        );
    }

    #[test]
    fn classifier_matches_enumeration_with_unequal_degrees() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..2000 {
            let n = rng.random_range(2..40usize);
            let di = rng.random_range(1..n);
            let dj = rng.random_range(1..n);
            let th = (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
            assert_eq!(
                classify_pure_equilibria(th.0, th.1, di, dj, n),
                brute_force(th, di, dj, n)
            );
        }
    }

    #[test]
    fn near_noiseless_min_policy_coordinates() {
        let p = GameParams::new(1e6, 1e6, 1e-6, 1e-6, 10, 4).unwrap();
        let g = make_regular_graph(10, 4).unwrap();
        let r = simulate(&p, &g, &homogeneous_profile(min_policy(), 10), 5000, 1).unwrap();
        assert!(r.coordination_rate.agrees_with(1.0, 3.0) || r.coordination_rate.mean == 1.0);
    }

    #[test]
    fn all_task1_payoff_is_one_on_average() {
        let p = GameParams::new(1.0, 1.0, 1.0, 1.0, 10, 4).unwrap();
        let g = make_regular_graph(10, 4).unwrap();
        let r = simulate(
            &p,
            &g,
            &homogeneous_profile(AffinePolicy::always(Task1), 10),
            20_000,
            2,
        )
        .unwrap();
        assert!(
            r.mean_payoff_per_agent.agrees_with(1.0, 3.0),
            "{:?}",
            r.mean_payoff_per_agent
        );
        assert_eq!(r.coordination_rate.mean, 1.0);
        assert_eq!(r.task1_share.mean, 1.0);
    }

    #[test]
    fn single_trial_is_flagged() {
        let p = GameParams::new(1.0, 1.0, 1.0, 1.0, 10, 4).unwrap();
        let g = make_regular_graph(10, 4).unwrap();
        let r = simulate(&p, &g, &homogeneous_profile(min_policy(), 10), 1, 2).unwrap();
        assert!(r.degenerate());
        assert_eq!(r.coordination_rate.se(), f64::INFINITY);
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = GameParams::new(2.0, 1.0, 1.0, 1.0, 10, 4).unwrap();
        let g = make_regular_graph(10, 4).unwrap();
        let prof = homogeneous_profile(min_policy(), 10);
        assert_eq!(
            simulate(&p, &g, &prof, 3000, 8).unwrap(),
            simulate(&p, &g, &prof, 3000, 8).unwrap()
        );
    }

    #[test]
    fn dominated_profile_has_positive_gain() {
        // Everyone (nearly) always takes task 2; deviating to task 1 when it
        // looks much easier pays.
        let p = GameParams::new(100.0, 100.0, 1.0, 1.0, 10, 4).unwrap();
        let g = make_regular_graph(10, 4).unwrap();
        let bad = AffinePolicy::new(1.0, 0.0, -1e3).unwrap();
        let prof = homogeneous_profile(bad, 10);
        let comps = [
            Competitor::Affine(AffinePolicy::new(1.0, -1.0, -2.5).unwrap()),
            Competitor::BestResponse(bad),
        ];
        let r = deviation_gain(&p, &g, &prof, 0, &comps, 20_000, 4).unwrap();
        assert!(r.gain.mean > 3.0 * r.gain.se(), "{r:?}");
    }

    #[test]
    fn perturbation_grid_shape() {
        let grid = perturbation_grid(&min_policy(), 0.4, 0.5, 9);
        assert_eq!(grid.len(), 81);
        assert!(grid.contains(&min_policy()));
        assert_eq!(grid[0].a2, -1.4);
        assert_eq!(grid[80].tau, 0.5);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let p = GameParams::new(1.0, 1.0, 1.0, 1.0, 10, 4).unwrap();
        let g = make_regular_graph(10, 2).unwrap();
        assert!(simulate(&p, &g, &homogeneous_profile(min_policy(), 10), 10, 0).is_err());
        let g = make_regular_graph(10, 4).unwrap();
        assert!(simulate(&p, &g, &homogeneous_profile(min_policy(), 9), 10, 0).is_err());
        assert!(simulate(&p, &g, &homogeneous_profile(min_policy(), 10), 0, 0).is_err());
    }
}
