use mtgg::equilibrium::{
    mean_squared_residual, project_affine, solve_affine_bne, ProjectionSample, SolveConfig,
};
use mtgg::graph::make_regular_graph;
use mtgg::math::{expected_cdf_shift, mc_mean, posterior_params, McConfig};
use mtgg::policy::{
    belief, AffinePolicy, BeliefContext, GameParams, Observation, SwitchingFunction, ROOT_TOL,
};
use mtgg::simulation::classify_pure_equilibria;
use proptest::prelude::*;
use rand::Rng;

fn var() -> impl Strategy<Value = f64> {
    0.05f64..20.0
}

fn game() -> impl Strategy<Value = GameParams> {
    (var(), var(), var(), var(), 1usize..10)
        .prop_map(|(s1, s2, a1, a2, k)| GameParams::new(s1, s2, a1, a2, 10, k).unwrap())
}

fn monotone_policy() -> impl Strategy<Value = AffinePolicy> {
    (0.1f64..3.0, -3.0f64..-0.1, -5.0f64..5.0)
        .prop_map(|(a1, a2, t)| AffinePolicy::new(a1, a2, t).unwrap())
}

proptest! {
    #[test]
    fn shift_is_antisymmetric_and_monotone(c in -8.0f64..8.0, dc in 0.001f64..2.0, v in 0.0f64..50.0) {
        let p = expected_cdf_shift(c, v).unwrap();
        let q = expected_cdf_shift(-c, v).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-12);
        prop_assert!(expected_cdf_shift(c + dc, v).unwrap() >= p);
    }

    #[test]
    fn posterior_shrinks(prior in var(), noise in var()) {
        let p = posterior_params(prior, noise, false).unwrap();
        prop_assert!(p.d > 0.0 && p.d < 1.0);
        prop_assert!(p.sigma_tilde_sq > 0.0);
        prop_assert!(p.sigma_tilde_sq < prior.min(noise));
    }

    #[test]
    fn belief_is_a_probability_and_scale_free(
        g in game(),
        (a1, a2, tau) in (-3.0f64..3.0, -3.0f64..3.0, -5.0f64..5.0),
        scale in 0.01f64..100.0,
        (y1, y2) in (-30.0f64..30.0, -30.0f64..30.0),
    ) {
        prop_assume!(a1.abs() + a2.abs() > 1e-3);
        let nb = AffinePolicy::new(a1, a2, tau).unwrap();
        let y = Observation::new(y1, y2);
        let b = belief(&BeliefContext::new(&g, nb).unwrap(), &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        let scaled = belief(&BeliefContext::new(&g, nb.scaled(scale)).unwrap(), &y).unwrap();
        prop_assert!((b - scaled).abs() < 1e-12);
    }

    #[test]
    fn switching_curve_is_increasing(g in game(), p in monotone_policy(), y2 in -30.0f64..30.0, dy in 0.01f64..5.0) {
        let sf = SwitchingFunction::new(&g, &p).unwrap();
        let (lo, _) = sf.root(y2, ROOT_TOL).unwrap();
        let (hi, _) = sf.root(y2 + dy, ROOT_TOL).unwrap();
        prop_assert!(hi > lo);
        prop_assert!(sf.slope_at(lo, y2).unwrap() > 0.0);
        prop_assert!(sf.value(lo, y2).abs() <= sf.max_abs_d_dxi() * ROOT_TOL);
    }

    #[test]
    fn centered_profile_gives_odd_curve(g in game(), (a1, a2) in (0.1f64..3.0, -3.0f64..-0.1), y2 in -30.0f64..30.0) {
        let sf = SwitchingFunction::new(&g, &AffinePolicy::new(a1, a2, 0.0).unwrap()).unwrap();
        let (up, _) = sf.root(y2, 1e-13).unwrap();
        let (dn, _) = sf.root(-y2, 1e-13).unwrap();
        prop_assert!((up + dn).abs() < 1e-9 * (1.0 + up.abs()));
    }

    #[test]
    fn projection_residual_is_consistent(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60),
    ) {
        let samples: Vec<ProjectionSample> = pts.iter().map(|&(y2, g)| ProjectionSample { y2, g_of_y2: g }).collect();
        prop_assume!(pts.iter().any(|p| (p.0 - pts[0].0).abs() > 1e-6));
        let fit = project_affine(&samples).unwrap();
        let r = mean_squared_residual(&samples, fit.slope, fit.intercept);
        prop_assert!((r - fit.residual).abs() <= 1e-9 * (1.0 + r));
        // Any other line does no better.
        let worse = mean_squared_residual(&samples, fit.slope + 0.01, fit.intercept);
        prop_assert!(worse >= r);
    }

    #[test]
    fn regular_graphs(n in 3usize..40, k in 2usize..39) {
        prop_assume!(k < n && (n * k) % 2 == 0);
        let g = make_regular_graph(n, k).unwrap();
        prop_assert!((0..n).all(|i| g.neighbors(i).len() == k));
        prop_assert_eq!(g.edge_count(), n * k / 2);
        prop_assert!(g.is_connected());
        prop_assert!(g.audit().is_ok());
    }

    #[test]
    fn some_pure_equilibrium_always_exists(t1 in -100.0f64..100.0, t2 in -100.0f64..100.0, n in 2usize..30, k in 1usize..29) {
        prop_assume!(k < n);
        prop_assert!(!classify_pure_equilibria(t1, t2, k, k, n).is_empty());
    }

    #[test]
    fn mc_is_deterministic(seed in any::<u64>(), m in 2u64..5000) {
        let cfg = McConfig::new(m, seed).unwrap();
        let f = |r: &mut rand_chacha::ChaCha8Rng| r.random::<f64>();
        prop_assert_eq!(mc_mean(cfg, f), mc_mean(cfg, f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn diffuse_fixed_point_is_the_min_policy(a1 in 0.1f64..10.0, a2 in 0.1f64..10.0, k in 2usize..10, seed in any::<u64>()) {
        let g = GameParams::diffuse(a1, a2, 10, k).unwrap();
        let cfg = SolveConfig { sample_count: 500, seed, ..SolveConfig::default() };
        let r = solve_affine_bne(&g, &cfg).unwrap();
        prop_assert!(r.converged);
        prop_assert!((r.a2_star + 1.0).abs() < 1e-6, "a2 = {}", r.a2_star);
        prop_assert!(r.tau_star.abs() < 1e-6);
    }

    #[test]
    fn solver_returns_a_fixed_point(g in game(), seed in any::<u64>()) {
        let cfg = SolveConfig { sample_count: 1000, seed, ..SolveConfig::default() };
        let r = solve_affine_bne(&g, &cfg).unwrap();
        prop_assume!(r.converged);
        let again = solve_affine_bne(&g, &SolveConfig { init_a2: r.a2_star, init_tau: r.tau_star, ..cfg }).unwrap();
        prop_assert!(again.converged);
        prop_assert!((again.a2_star - r.a2_star).abs() <= 2.0 * cfg.conv_tol);
        prop_assert!((again.tau_star - r.tau_star).abs() <= 2.0 * cfg.conv_tol);
        prop_assert_eq!(solve_affine_bne(&g, &cfg).unwrap(), r);
    }
}
