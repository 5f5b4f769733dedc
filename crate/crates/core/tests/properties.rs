//! Property tests for the structural invariants of the model and its
//! analysis: field continuity across the switching plane, positive
//! invariance of the orthant, existence gating of the equilibria, the
//! total-population identities, next-generation spectral radii, and the
//! monotonicity of the feedback thresholds.

use proptest::prelude::*;
use psyllid_core::analysis::{
    derived_quantities, equilibrium_e1, equilibrium_e2, equilibrium_e2p_closed, k_star,
    ngm_builder, offspring_number_feedback, stability_verdict, Stability,
};
use psyllid_core::model::{
    population_cap, rhs, rhs_abundance, rhs_natural, rhs_scarcity, ControlInputs, ModelParams,
    State,
};

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        0.2f64..0.8,
        0.5f64..20.0,
        1e-4f64..1e-2,
        0.01f64..0.2,
        0.01f64..0.2,
        1.0f64..3.0,
        0.05f64..1.0,
        0.1f64..2.0,
    )
        .prop_map(|(r, rho, sigma, mu, delta, gamma, nu, eta)| {
            ModelParams::new(r, rho, sigma, mu, delta, gamma, nu, eta).unwrap()
        })
}

fn control_strategy() -> impl Strategy<Value = ControlInputs> {
    (0.0f64..5000.0, 0.0f64..=1.0).prop_map(|(a_p, alpha)| ControlInputs { a_p, alpha })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    // the two branch-pinned fields coincide on the switching plane
    #[test]
    fn field_continuity_on_plane(
        params in params_strategy(),
        control in control_strategy(),
        a in 0.0f64..5000.0,
        u in 0.0f64..5000.0,
    ) {
        let m = (a + control.a_p) / params.gamma;
        let x = State::new(m, a, u);
        let fa = rhs_abundance(&params, control, x).unwrap();
        let fs = rhs_scarcity(&params, control, x).unwrap();
        let gap = (fa - fs).max_norm();
        prop_assert!(gap < 1e-12 * fa.max_norm().max(1.0), "gap {gap}");
    }

    // the flow never points out of the nonnegative orthant
    #[test]
    fn boundary_nonnegativity(
        params in params_strategy(),
        control in control_strategy(),
        x in 0.0f64..5000.0,
        y in 0.0f64..5000.0,
    ) {
        let on_m = rhs(&params, control, State::new(0.0, x, y)).unwrap();
        prop_assert!(on_m.m >= 0.0);
        let on_a = rhs(&params, control, State::new(x, 0.0, y)).unwrap();
        prop_assert!(on_a.a >= 0.0);
        let on_u = rhs(&params, control, State::new(x, y, 0.0)).unwrap();
        prop_assert!(on_u.u >= 0.0);
    }

    // zero control reduces to the natural field bit-for-bit
    #[test]
    fn zero_control_reduction(
        params in params_strategy(),
        m in 0.0f64..8000.0,
        a in 0.0f64..8000.0,
        u in 0.0f64..8000.0,
    ) {
        let x = State::new(m, a, u);
        let controlled = rhs(&params, ControlInputs::NONE, x).unwrap();
        let natural = rhs_natural(&params, x).unwrap();
        prop_assert_eq!(controlled.as_array(), natural.as_array());
    }

    // above the Ricker cap the total population strictly dissipates
    #[test]
    fn total_population_dissipates_above_cap(
        params in params_strategy(),
        scale in 1.01f64..4.0,
        split_a in 0.0f64..1.0,
        split_u in 0.0f64..1.0,
    ) {
        let cap = population_cap(&params);
        prop_assume!(cap > 0.0);
        let total = cap * scale;
        let a = total * split_a * (1.0 - split_u);
        let u = total * (1.0 - split_a) * split_u;
        let m = total - a - u;
        let d = rhs(&params, ControlInputs::NONE, State::new(m, a, u)).unwrap();
        prop_assert!(d.m + d.a + d.u < 0.0);
    }

    // existence gates and total-population identities of the equilibria
    #[test]
    fn equilibrium_existence_and_sums(params in params_strategy()) {
        let q = derived_quantities(&params);
        let e1 = equilibrium_e1(&params);
        prop_assert_eq!(e1.exists, q.n_f > 1.0);
        if e1.exists {
            let want = (q.n_f).ln() / params.sigma;
            prop_assert!((e1.coords.total() - want).abs() <= 1e-10 * want);
            prop_assert!(e1.coords.m > 0.0 && e1.coords.a > 0.0 && e1.coords.u > 0.0);
            prop_assert!(e1.residual <= 1e-9 * e1.coords.max_norm().max(1.0));
        }
        let e2 = equilibrium_e2(&params).unwrap();
        prop_assert_eq!(e2.exists, q.n_m > 1.0 && q.theta_m > 1.0);
        if e2.exists {
            let want = (q.n_m).ln() / params.sigma;
            prop_assert!((e2.coords.total() - want).abs() <= 1e-10 * want);
            prop_assert!(e2.residual <= 1e-9 * e2.coords.max_norm().max(1.0));
        }
    }

    // Routh–Hurwitz and eigenvalue verdicts agree wherever computed; the
    // equilibria are stable for their own fields whenever they exist
    #[test]
    fn stability_verdicts_agree(params in params_strategy()) {
        let q = derived_quantities(&params);
        let e1 = equilibrium_e1(&params);
        if e1.exists {
            let v = stability_verdict(&params, &e1).unwrap();
            prop_assert_eq!(
                v.stability.unwrap().verdict,
                Stability::LocallyAsymptoticallyStable
            );
        }
        let e2 = equilibrium_e2(&params).unwrap();
        if e2.exists {
            let v = stability_verdict(&params, &e2).unwrap();
            prop_assert_eq!(
                v.stability.unwrap().verdict,
                Stability::LocallyAsymptoticallyStable
            );
        }
        // origin: stable below the offspring thresholds, saddle above
        let e0 = stability_verdict(&params, &psyllid_core::analysis::equilibrium_e0(&params))
            .unwrap();
        let want_abundance = if q.n_f < 1.0 {
            Stability::LocallyAsymptoticallyStable
        } else {
            Stability::UnstableSaddle
        };
        let want_scarcity = if q.n_m < 1.0 {
            Stability::LocallyAsymptoticallyStable
        } else {
            Stability::UnstableSaddle
        };
        prop_assert_eq!(e0.stability.unwrap().verdict, want_abundance);
        prop_assert_eq!(e0.stability_scarcity.unwrap().verdict, want_scarcity);
    }

    // numerically computed next-generation spectral radii match the closed
    // forms for random parameters and controls
    #[test]
    fn ngm_spectral_radii(
        params in params_strategy(),
        k in 0.0f64..50.0,
        alpha in 0.0f64..=1.0,
    ) {
        let q = derived_quantities(&params);
        let ngm = ngm_builder(&params, k, alpha).unwrap();
        prop_assert!((ngm.rho1 - q.n_f).abs() <= 1e-12 * q.n_f.max(1.0));
        let want = offspring_number_feedback(&params, k, alpha);
        prop_assert!((ngm.rho2 - want).abs() <= 1e-12 * want.max(1.0));
    }

    // the extinction gain decreases with the killing rate, and the feedback
    // offspring number decreases in both controls
    #[test]
    fn threshold_monotonicity(
        params in params_strategy(),
        alpha in 0.0f64..0.99,
        dalpha in 0.01f64..1.0,
        k in 0.01f64..50.0,
        dk in 0.01f64..50.0,
    ) {
        let q = derived_quantities(&params);
        prop_assume!(q.n_m > 1.0);
        let a2 = (alpha + dalpha).min(1.0);
        prop_assert!(k_star(&params, alpha) > k_star(&params, a2));
        prop_assert!(
            offspring_number_feedback(&params, k, alpha)
                > offspring_number_feedback(&params, k + dk, alpha)
        );
        if alpha < a2 {
            prop_assert!(
                offspring_number_feedback(&params, k, alpha)
                    > offspring_number_feedback(&params, k, a2)
            );
        }
        // the closed-loop scarcity equilibrium exists exactly below k*
        let ks = k_star(&params, alpha);
        let below = equilibrium_e2p_closed(&params, alpha, 0.9 * ks).unwrap();
        let above = equilibrium_e2p_closed(&params, alpha, 1.1 * ks).unwrap();
        prop_assert!(above.exists != below.exists || !below.exists);
        prop_assert!(!above.exists);
    }
}

/// Fold trichotomy across random admissible parameter sets: two positive
/// scarcity equilibria one part in a thousand below the critical lure, none
/// the same margin above, and the roots merge approaching the fold.
#[test]
fn fold_trichotomy_random_parameters() {
    use psyllid_core::thresholds::{ap_crit, count_equilibria_scarcity};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xF01D);
    let mut checked = 0;
    while checked < 20 {
        let params = match ModelParams::new(
            rng.gen_range(0.2..0.8),
            rng.gen_range(2.0..20.0),
            rng.gen_range(1e-4..1e-2),
            rng.gen_range(0.01..0.2),
            rng.gen_range(0.01..0.2),
            rng.gen_range(1.0..3.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.1..2.0),
        ) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let q = derived_quantities(&params);
        if q.theta_m <= 1.1 || q.n_m <= 1.1 {
            continue;
        }
        let fold = ap_crit(&params, 0.5, 1e-9).unwrap();
        let below =
            count_equilibria_scarcity(&params, 0.5, (1.0 - 1e-3) * fold.a_p_crit).unwrap();
        assert_eq!(below.count, 2, "below the fold for {params:?}");
        let above =
            count_equilibria_scarcity(&params, 0.5, (1.0 + 1e-3) * fold.a_p_crit).unwrap();
        assert_eq!(above.count, 0, "above the fold for {params:?}");
        let gap_at = |rel: f64| {
            let roots =
                count_equilibria_scarcity(&params, 0.5, (1.0 - rel) * fold.a_p_crit).unwrap();
            assert_eq!(roots.count, 2);
            (roots.roots[1].a - roots.roots[0].a).abs()
        };
        assert!(gap_at(1e-4) < gap_at(1e-2), "roots must merge toward the fold");
        checked += 1;
    }
}
