use proptest::prelude::*;
use screenequil::equilibria::{duopoly_strike, monopoly_strike};
use screenequil::market::expected_net_max;
use screenequil::welfare::{interim_utility, surplus, utility_curve};
use screenequil::{solve, solve_with, Density64, Environment64, Firm, Setting, SolveOptions};

fn environment(half_width: f64, shock_sd: f64, v0: f64) -> Environment64 {
    Environment64::new(
        v0,
        Density64::uniform(-half_width, half_width).unwrap(),
        Density64::normal(0.0, shock_sd).unwrap(),
    )
    .unwrap()
}

fn quick() -> SolveOptions {
    SolveOptions::with_points(101)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duopoly_strikes_double_the_monopoly_ones(w in 0.3f64..2.0, sd in 0.3f64..2.0, g in -1.0f64..1.0) {
        let env = environment(w, sd, 4.0 * w + 1.0);
        let gamma = g * w;
        for firm in [Firm::A, Firm::B] {
            let pm = monopoly_strike(&env, firm, gamma);
            prop_assert!((duopoly_strike(&env, firm, gamma) - 2.0 * pm).abs() <= 1e-12 * (1.0 + pm));
        }
        prop_assert!((duopoly_strike(&env, Firm::A, gamma) + duopoly_strike(&env, Firm::B, gamma) - 4.0 * w).abs() < 1e-12);
    }

    #[test]
    fn schedules_are_convex_and_decreasing(w in 0.3f64..1.5, sd in 0.5f64..1.5) {
        let env = environment(w, sd, 8.0 * w + 1.0);
        let sol = solve_with(&env, Setting::DuopolyNe, &quick()).unwrap();
        for firm in [Firm::A, Firm::B] {
            let s = sol.schedule(firm).unwrap();
            let ps: Vec<f64> = (0..=40).map(|i| s.max_strike * i as f64 / 40.0).collect();
            let fees: Vec<f64> = ps.iter().map(|&p| s.fee(p).unwrap()).collect();
            for w3 in fees.windows(3) {
                prop_assert!(w3[1] <= w3[0] + 1e-12);
                prop_assert!(w3[0] - 2.0 * w3[1] + w3[2] >= -1e-10);
            }
            prop_assert!((s.fee(s.max_strike).unwrap() - s.boundary_fee).abs() < 1e-12);
        }
    }

    #[test]
    fn surplus_accounts_for_every_unit(w in 0.3f64..1.5, sd in 0.5f64..1.5) {
        let env = environment(w, sd, 8.0 * w + 2.0);
        for k in [Setting::DuopolyNe, Setting::Spot, Setting::Exclusive] {
            let r = surplus(&solve_with(&env, k, &quick()).unwrap()).unwrap();
            prop_assert!(r.accounting_gap.abs() < 1e-6, "{}: {:?}", k, r);
            prop_assert!(r.consumer_surplus > 0.0);
        }
    }

    #[test]
    fn no_type_gains_by_mimicking(w in 0.3f64..1.5, sd in 0.5f64..1.5, g in -1.0f64..1.0, h in -1.0f64..1.0) {
        let env = environment(w, sd, 8.0 * w + 1.0);
        let sol = solve_with(&env, Setting::DuopolyNe, &quick()).unwrap();
        let (gamma, other) = (g * w, h * w);
        let a = sol.contract(Firm::A, other).unwrap();
        let b = sol.contract(Firm::B, other).unwrap();
        let mimic = expected_net_max(&env, gamma, a.strike, b.strike) - a.fee - b.fee;
        prop_assert!(interim_utility(&sol, gamma).unwrap() >= mimic - 1e-7);
    }
}

#[test]
fn symmetric_curves_under_a_logistic_shock() {
    let env = Environment64::new(
        9.0,
        Density64::uniform(-1.0, 1.0).unwrap(),
        Density64::logistic(0.0, 0.6).unwrap(),
    )
    .unwrap();
    for k in [Setting::DuopolyNe, Setting::Spot, Setting::Exclusive] {
        let c = utility_curve(&solve(&env, k).unwrap()).unwrap();
        assert!(c.asymmetry() < 1e-8, "{k}");
        assert!(c.min_second_difference() > -1e-8, "{k}");
    }
}

#[test]
fn truncated_normal_types() {
    let g = Density64::truncated(Density64::normal(0.0, 0.5).unwrap(), -1.0, 1.0).unwrap();
    let env = Environment64::new(12.0, g, Density64::std_normal()).unwrap();
    let sol = solve(&env, Setting::DuopolyNe).unwrap();
    assert!((sol.strike(Firm::A, 0.0) - sol.strike(Firm::B, 0.0)).abs() < 1e-12);
    let r = surplus(&sol).unwrap();
    assert!(r.balanced(), "{r:?}");
}
