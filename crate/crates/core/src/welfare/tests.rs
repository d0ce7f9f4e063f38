use proptest::prelude::*;

use super::*;
use crate::densities::Density;
use crate::equilibria::{duopoly_strike, solve};
use crate::scalar::linspace;

fn env() -> Environment<f64> {
    Environment::running_example()
}

fn solved(k: Setting) -> SettingSolution<f64> {
    solve(&env(), k).unwrap()
}

#[test]
fn interim_utility_at_the_median_type() {
    let sp = interim_utility(&solved(Setting::Spot), 0.0).unwrap();
    assert!((sp - 4.868_295_013_8).abs() < 1e-8, "spot {sp}");
    let ne = interim_utility(&solved(Setting::DuopolyNe), 0.0).unwrap();
    assert!((ne - 5.264_942_442_1).abs() < 1e-7, "duopoly {ne}");
    let e = interim_utility(&solved(Setting::Exclusive), 0.0).unwrap();
    assert!((e - 5.0).abs() < 1e-5, "exclusive {e}");
}

#[test]
fn interim_utility_rejects_foreign_types() {
    let sol = solved(Setting::DuopolyNe);
    assert!(matches!(interim_utility(&sol, 1.5), Err(Error::InvalidArgument(_))));
    assert!(interim_utility(&sol, f64::NAN).is_err());
}

#[test]
fn spot_surplus_split() {
    let r = surplus(&solved(Setting::Spot)).unwrap();
    assert!((r.consumer_surplus - 4.995_070_669_7).abs() < 1e-7, "{r:?}");
    assert!((r.producer_surplus_a - 1.464_794_773_5).abs() < 1e-7);
    assert!((r.producer_surplus_b - 1.464_794_773_5).abs() < 1e-7);
    assert!((r.total_surplus - 7.924_660_216_7).abs() < 1e-7);
    assert!(r.balanced());
}

#[test]
fn joint_monopoly_surplus() {
    let r = surplus(&solved(Setting::MultiMonopoly)).unwrap();
    assert!((r.producer_surplus_a - 7.797_884_560_802_865).abs() < 1e-9);
    assert_eq!(r.producer_surplus_b, 0.0);
    assert!(r.consumer_surplus > 0.0 && r.consumer_surplus < 0.2, "{r:?}");
    assert!(r.balanced());
}

#[test]
fn accounting_identity_in_every_setting() {
    for k in Setting::ALL {
        let r = surplus(&solved(k)).unwrap();
        assert!(r.accounting_gap.abs() < 1e-6, "{k}: {r:?}");
        assert!(r.consumer_surplus >= 0.0, "{k}");
    }
}

#[test]
fn scaling_the_types() {
    let e = env();
    assert_eq!(scale(&e, 1.0).unwrap(), e);
    assert!(scale(&e, 0.0).is_err());
    assert!(scale(&e, -1.0).is_err());
    let s = scale(&e, 0.05).unwrap();
    assert!((duopoly_strike(&s, Firm::B, 0.0) - 0.1).abs() < 1e-12);
    assert!((s.max_inv_g() - 0.05 * e.max_inv_g()).abs() < 1e-12);
    assert_eq!(s.v0(), e.v0());
    assert_eq!(s.shock(), e.shock());
}

#[test]
fn early_contracting_limits() {
    let l = limit_quantities(&env()).unwrap();
    assert!((l.fee_a - 0.797_884_560_8).abs() < 1e-9);
    assert!((l.fee_b - l.fee_a).abs() < 1e-14);
    assert!((l.cs_e - 7.0).abs() < 1e-9);
    assert!((l.cs_ne - 6.202_115_439_2).abs() < 1e-9);
    assert!((l.cs_sp - 5.291_256_286_2).abs() < 1e-9);
    assert!(l.ordered());
    assert!(l.hypothesis.holds);
    let poor = env().with_v0(2.0).unwrap();
    assert!(!limit_quantities(&poor).unwrap().hypothesis.holds);
}

#[test]
fn limits_agree_with_quadrature() {
    let e = env();
    let f = e.shock();
    let q = |phi: &dyn Fn(f64) -> f64| integrate(|t| phi(t) * f.pdf(t), -12.0, 12.0, &[-7.0, 0.0, 7.0], e.quad()).value;
    let l = limit_quantities(&e).unwrap();
    let plus = |x: f64| x.max(0.0);
    assert!((q(&|t| plus(7.0 + t - plus(7.0 - t))) - l.fee_b).abs() < 1e-9);
    assert!((q(&|t| plus(7.0 - t).min(plus(7.0 + t))) - l.cs_ne).abs() < 1e-9);
}

#[test]
fn fees_approach_the_limit_as_sigma_shrinks() {
    let e = env();
    let target = limit_quantities(&e).unwrap().fee_b;
    let mut last = f64::INFINITY;
    for s in [0.2, 0.1, 0.05, 0.02, 0.01] {
        let sol = solve(&scale(&e, s).unwrap(), Setting::DuopolyNe).unwrap();
        let dev = target - mean_fee(&sol, Firm::B).unwrap();
        assert!(dev > 0.0 && dev < last, "sigma {s}: {dev} after {last}");
        last = dev;
        if s <= 0.02 {
            // first order: boundary fee 2φ(0) - 3σ, mean strike 2σ at demand 1/2
            assert!((dev / s - 2.0).abs() < 0.1, "sigma {s}: {}", dev / s);
        }
    }
}

fn curves() -> [UtilityCurve<f64>; 3] {
    [Setting::Exclusive, Setting::DuopolyNe, Setting::Spot].map(|k| utility_curve(&solved(k)).unwrap())
}

#[test]
fn utility_curves_convex_and_symmetric() {
    for c in curves() {
        assert!(c.min_second_difference() >= -1e-8, "{}", c.setting);
        assert!(c.asymmetry() <= 1e-8, "{}: {}", c.setting, c.asymmetry());
        assert!(c.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn dispersive_ranking() {
    let [e, ne, sp] = curves();
    let r = dispersion_compare(&e, &ne).unwrap();
    assert_eq!(r.verdict, Dispersion::StrictlyMore, "{r:?}");
    assert!(r.max_excess > 1e-6);
    assert_eq!(dispersion_compare(&ne, &sp).unwrap().verdict, Dispersion::StrictlyMore);
    assert_eq!(dispersion_compare(&sp, &ne).unwrap().verdict, Dispersion::Incomparable);
    let same = dispersion_compare(&ne, &ne).unwrap();
    assert_eq!(same.verdict, Dispersion::WeaklyMore);
    assert!(same.ordinally_equivalent);
}

#[test]
fn dispersion_needs_a_shared_grid() {
    let ne = utility_curve(&solved(Setting::DuopolyNe)).unwrap();
    let mut other = ne.clone();
    other.gamma_grid[3] += 1e-3;
    assert!(dispersion_compare(&ne, &other).is_err());
}

#[test]
fn level_ordering_is_reported() {
    let [e, ne, sp] = curves();
    let ne_sp = level_ordering(&ne, &sp).unwrap();
    assert!(ne_sp.holds_everywhere, "{ne_sp:?}");
    let e_ne = level_ordering(&e, &ne).unwrap();
    // The exclusive curve dips below the non-exclusive one around the median type.
    assert!(!e_ne.holds_everywhere);
    assert!(e_ne.worst_gamma.abs() < 1e-12);
    assert!((e_ne.worst_gap - (5.0 - 5.264_942_442_1)).abs() < 1e-5);
}

#[test]
fn duopoly_slope_matches_demand() {
    let sol = solved(Setting::DuopolyNe);
    let grid = linspace(-0.99, 0.99, 23);
    let h = 1e-5;
    for &g in &grid {
        let slope = (interim_utility(&sol, g + h).unwrap() - interim_utility(&sol, g - h).unwrap()) / (2.0 * h);
        let (qa, qb) = interim_demands(&sol, g).unwrap();
        assert!((qa + qb - 1.0).abs() < 1e-12);
        assert!((slope - (2.0 * qb - 1.0)).abs() < 1e-6, "gamma {g}: {slope}");
        assert!(slope.abs() <= 1.0);
    }
}

#[test]
fn envelope_consistency() {
    for k in [
        Setting::DuopolyNe,
        Setting::Spot,
        Setting::Exclusive,
        Setting::MultiMonopoly,
    ] {
        let sol = solved(k);
        let lo = sol.gamma_grid()[0];
        let u0 = interim_utility(&sol, lo).unwrap();
        let mut knots = sol.gamma_grid().to_vec();
        knots.extend(sol.gamma_dagger());
        for &g in sol.gamma_grid().iter().step_by(20) {
            let rent = integrate(
                |x| envelope_integrand(&sol, x).unwrap(),
                lo,
                g,
                &knots,
                sol.env().quad(),
            )
            .value;
            let du = interim_utility(&sol, g).unwrap() - u0;
            assert!((du - rent).abs() < 1e-6, "{k} at {g}: {du} vs {rent}");
        }
    }
}

#[test]
fn joint_monopoly_gate_at_the_running_example() {
    let c = joint_monopoly_comparison(&env(), &SolveOptions::default()).unwrap();
    assert_eq!(c.status, ComparisonStatus::OutsideHypothesis);
    assert_eq!(c.status.describe(), "outside the ranking's hypothesis");
    assert!(c.symmetric_types);
    assert!(!c.threshold.holds);
    assert_eq!(c.reports.len(), 4);
}

#[test]
fn joint_monopoly_extremal_above_the_threshold() {
    let e = env().with_v0(150.0).unwrap();
    let c = joint_monopoly_comparison(&e, &SolveOptions::with_points(101)).unwrap();
    assert!(c.threshold.holds);
    assert_eq!(c.status, ComparisonStatus::Holds, "{c:?}");
}

#[test]
fn surplus_sweep_keeps_input_order() {
    let rows = surplus_sweep(
        &env(),
        &[1.0, 0.5],
        &[Setting::Spot, Setting::DuopolyNe],
        &SolveOptions::with_points(101),
    )
    .unwrap();
    let keys: Vec<(f64, Setting)> = rows.iter().map(|(s, r)| (*s, r.setting)).collect();
    assert_eq!(
        keys,
        vec![
            (1.0, Setting::Spot),
            (1.0, Setting::DuopolyNe),
            (0.5, Setting::Spot),
            (0.5, Setting::DuopolyNe)
        ]
    );
}

#[test]
fn logistic_shocks_balance() {
    let e = Environment::<f64>::new(
        8.0,
        Density::uniform(-1.0, 1.0).unwrap(),
        Density::logistic(0.0, 0.5).unwrap(),
    )
    .unwrap();
    for k in [Setting::DuopolyNe, Setting::Spot, Setting::Exclusive] {
        let r = surplus(&solve(&e, k).unwrap()).unwrap();
        assert!(r.balanced(), "{k}: {r:?}");
    }
}

fn curve(values: Vec<f64>) -> UtilityCurve<f64> {
    let n = values.len();
    UtilityCurve {
        setting: Setting::DuopolyNe,
        gamma_grid: linspace(-1.0, 1.0, n),
        values,
    }
}

proptest! {
    #[test]
    fn stretching_a_curve_disperses_it(
        raw in prop::collection::vec(-5.0f64..5.0, 3..40),
        c in 1.01f64..3.0,
        shift in -10.0f64..10.0,
    ) {
        let mut xs = raw.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        prop_assume!(xs.len() >= 2);
        let v = curve(xs.clone());
        let u = curve(xs.iter().map(|x| c * x + shift).collect());
        prop_assert_eq!(dispersion_compare(&u, &v).unwrap().verdict, Dispersion::StrictlyMore);
        prop_assert_eq!(dispersion_compare(&v, &u).unwrap().verdict, Dispersion::Incomparable);
        let moved = curve(xs.iter().map(|x| x + shift).collect());
        prop_assert_eq!(dispersion_compare(&moved, &v).unwrap().verdict, Dispersion::WeaklyMore);
    }

    #[test]
    fn reversed_rankings_are_incomparable(raw in prop::collection::vec(-5.0f64..5.0, 3..20)) {
        let mut xs = raw.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        prop_assume!(xs.len() >= 2);
        let v = curve(xs.clone());
        let u = curve(xs.iter().map(|x| -x).collect());
        let r = dispersion_compare(&u, &v).unwrap();
        prop_assert!(!r.ordinally_equivalent);
        prop_assert_eq!(r.verdict, Dispersion::Incomparable);
    }
}
